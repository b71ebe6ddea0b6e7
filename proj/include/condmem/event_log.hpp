#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "condmem/types.hpp"

namespace condmem {

/*!
 * Text event-log format, one record per line:
 *
 *     trial hL hR kind ageL ageR detections
 *
 * `detections` is `-` or a comma-separated list of `a:-4`, `b:10:bg`.
 * Header lines start with `#`; the embedded `#@ key = value` lines carry the
 * full configuration so a log can be re-analysed on its own.
 */
void write_event_log(std::ostream& out, const EventLog& log);
void save_event_log(const std::filesystem::path& path, const EventLog& log);

/// Throws ParseError with the line number on malformed input.
EventLog read_event_log(std::istream& in);
EventLog load_event_log(const std::filesystem::path& path);

std::string format_record(const TrialRecord& record);
TrialRecord parse_record(std::string_view line);

}  // namespace condmem
