#include "pucci/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pucci/geometry.hpp"

namespace pucci {

std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    row(header);
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("csv row width mismatch");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) buf_ += ',';
        buf_ += cells[k];
    }
    buf_ += '\n';
    return *this;
}

nlohmann::json point_json(const Point& p, int dim) {
    nlohmann::json a = nlohmann::json::array();
    for (int k = 0; k < dim; ++k) a.push_back(p[k]);
    return a;
}

nlohmann::json to_json(const Domain& d) {
    nlohmann::json j;
    j["dim"] = d.dim();
    switch (d.kind()) {
        case DomainKind::Box:
            j["kind"] = "box";
            j["lo"] = point_json(d.lo(), d.dim());
            j["hi"] = point_json(d.hi(), d.dim());
            break;
        case DomainKind::Ball:
            j["kind"] = "ball";
            j["center"] = point_json(d.center(), d.dim());
            j["radius"] = d.outer_radius();
            break;
        case DomainKind::Annulus:
            j["kind"] = "annulus";
            j["center"] = point_json(d.center(), d.dim());
            j["inner_radius"] = d.inner_radius();
            j["outer_radius"] = d.outer_radius();
            break;
    }
    return j;
}

nlohmann::json to_json(const Density& d) {
    nlohmann::json j;
    j["id"] = d.id();
    j["lower"] = d.lower();
    j["upper"] = d.upper();
    j["lipschitz"] = d.lipschitz();
    return j;
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace pucci
