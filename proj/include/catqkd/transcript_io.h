#ifndef CATQKD_TRANSCRIPT_IO_H
#define CATQKD_TRANSCRIPT_IO_H

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catqkd/protocol.h"

namespace catqkd {

/// Value of the "schema" field of every record.
inline constexpr std::string_view kTranscriptSchema = "catqkd.round/1";

/// One round as a single-line JSON object (no trailing newline). The field
/// list is documented in README.md.
std::string to_jsonl_line(const RoundTranscript& round);

/// Inverse of to_jsonl_line. Throws std::invalid_argument on malformed input
/// or an unknown schema.
RoundTranscript parse_jsonl_line(std::string_view line);

/// One line per round.
void write_jsonl(std::ostream& out, std::span<const RoundTranscript> rounds);

/// Reads until end of stream, skipping blank lines.
std::vector<RoundTranscript> read_jsonl(std::istream& in);

}  // namespace catqkd

#endif
