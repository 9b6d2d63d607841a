#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "steinwave/gsvgd.hpp"
#include "steinwave/mcmc.hpp"
#include "steinwave/wave.hpp"

namespace steinwave::io {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a 64-bit, used to fingerprint configs in output headers.
std::uint64_t fnv1a(const std::string& data);

/// Provenance lines prepended to every output file. The timestamp sits on its
/// own line ("# generated=...") so determinism checks can drop it.
struct FileHeader {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string schema;  // e.g. "observation-record/1"

  std::string render() const;
};

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Reads a whole file; throws on failure.
std::string read_file(const std::filesystem::path& path);

/// Strips lines beginning with "# generated=" (the only intentionally
/// nondeterministic header line) for byte-comparisons.
std::string without_timestamps(const std::string& content);

std::string to_csv(const wave::ObservationRecord& record, const FileHeader& header);
wave::ObservationRecord record_from_csv(const std::string& content);

std::string to_csv(const vi::Trace& trace, const FileHeader& header);
std::string to_json(const vi::Trace& trace, const FileHeader& header);

std::string to_csv(const mcmc::Chain& chain, const FileHeader& header);

std::string format_double(double v);

}  // namespace steinwave::io
