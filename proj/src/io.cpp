#include "douba/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "douba/errors.hpp"

namespace douba {

std::string format_double(double v) {
    // 17 significant digits always round-trip; prefer the shorter form when
    // it parses back exactly.
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    if (std::strtod(buf, nullptr) == v) return buf;
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::filesystem::path grid_sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension();
    p += ".grid.json";
    return p;
}

void write_measure_csv(const std::filesystem::path& path, const DiscreteMeasure& m) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot open for writing: " + path.string());
    for (int a = 0; a < m.dim(); ++a) out << "x" << (a + 1) << ",";
    out << "weight\n";
    for (int i = 0; i < m.size(); ++i) {
        for (int a = 0; a < m.dim(); ++a) out << format_double(m.points()(i, a)) << ",";
        out << format_double(m.weights()[i]) << "\n";
    }
    if (!out) throw InvalidInputError("write failed: " + path.string());
    if (m.grid()) {
        nlohmann::json j;
        const Grid& g = *m.grid();
        j["lo"] = std::vector<double>(g.domain().lo().data(),
                                      g.domain().lo().data() + g.domain().dim());
        j["hi"] = std::vector<double>(g.domain().hi().data(),
                                      g.domain().hi().data() + g.domain().dim());
        j["cells"] = g.cells_per_axis();
        write_text_file(grid_sidecar_path(path), j.dump() + "\n");
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || (end && *end != '\0' && *end != '\r')) {
        throw InvalidInputError("bad numeric field '" + s + "' in " + path.string());
    }
    return v;
}

}  // namespace

DiscreteMeasure read_measure_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open measure file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InvalidInputError("empty measure file: " + path.string());
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.back().find("weight") == std::string::npos) {
        throw InvalidInputError("measure header must be x1,...,xd,weight in " + path.string());
    }
    const int d = static_cast<int>(header.size()) - 1;

    std::vector<double> coords, weights;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != d + 1) {
            throw InvalidInputError("bad row width in " + path.string());
        }
        for (int a = 0; a < d; ++a) coords.push_back(parse_double(fields[a], path));
        weights.push_back(parse_double(fields[d], path));
    }
    if (weights.empty()) throw InvalidInputError("measure file has no atoms: " + path.string());

    const int n = static_cast<int>(weights.size());
    Matrix pts(n, d);
    Vector w(n);
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) pts(i, a) = coords[static_cast<size_t>(i) * d + a];
        w[i] = weights[static_cast<size_t>(i)];
    }

    const auto sidecar = grid_sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        nlohmann::json j = nlohmann::json::parse(read_text_file(sidecar));
        const auto lo = j.at("lo").get<std::vector<double>>();
        const auto hi = j.at("hi").get<std::vector<double>>();
        const auto cells = j.at("cells").get<std::vector<int>>();
        Vector vlo(lo.size()), vhi(hi.size());
        for (size_t a = 0; a < lo.size(); ++a) vlo[static_cast<Eigen::Index>(a)] = lo[a];
        for (size_t a = 0; a < hi.size(); ++a) vhi[static_cast<Eigen::Index>(a)] = hi[a];
        return DiscreteMeasure(std::move(pts), std::move(w),
                               Grid(BoxDomain(std::move(vlo), std::move(vhi)), cells));
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

void write_potentials_csv(const std::filesystem::path& path, const Vector& potentials) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot open for writing: " + path.string());
    out << "atom_index,potential\n";
    for (Eigen::Index i = 0; i < potentials.size(); ++i) {
        out << i << "," << format_double(potentials[i]) << "\n";
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw InvalidInputError("write failed: " + path.string());
}

}  // namespace douba
