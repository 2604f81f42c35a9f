#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mlab {

// Column-oriented CSV writer. Values are printed with %.17g so doubles round
// trip exactly; header_comments become leading '#' lines, then one line of
// comma-separated column names. All columns must share a length.
void write_csv(const std::string& path, const std::vector<std::string>& header_comments,
               const std::vector<std::string>& column_names,
               const std::vector<std::vector<double>>& columns);

// Lowercase hex SHA-256.
std::string sha256_bytes(const void* data, std::size_t n);
std::string sha256_file(const std::string& path);

// Flat text manifest: "key = value" preamble lines, then one
// "<sha256>  <bytes>  <name>" line per file. Files are hashed as they are on
// disk at call time.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& preamble,
                    const std::vector<std::pair<std::string, std::string>>& named_files);

}  // namespace mlab
