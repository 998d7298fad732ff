#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pucci/common.hpp"

namespace pucci {

class Domain;
class Density;

/// "%.12g" rendering used by every CSV so outputs are byte-stable.
std::string fmt12(double v);

/// Minimal CSV builder: header once, then rows of already-formatted cells.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& row(const std::vector<std::string>& cells);
    const std::string& str() const noexcept { return buf_; }

private:
    std::size_t width_;
    std::string buf_;
};

nlohmann::json to_json(const Domain& domain);
nlohmann::json to_json(const Density& density);
nlohmann::json point_json(const Point& p, int dim);

/// Writes `content` to `path` (binary mode so LF stays LF). Throws Error.
void write_file(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

/// 64-bit FNV-1a, used for config hashes in run manifests.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace pucci
