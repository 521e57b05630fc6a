#include "bellman/grid_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bellman {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void write_grid_csv(std::ostream& os, const GridFunction& u) {
    const Mesh& mesh = u.mesh();
    const MeshSpec& spec = mesh.spec();
    os << format_double(spec.horizon) << ',' << format_double(spec.tau) << ','
       << format_double(spec.h) << ',' << mesh.dim() << ',' << mesh.num_directions() << ','
       << spec.index_radius;
    for (const auto& dir : spec.directions)
        for (double v : dir) os << ',' << format_double(v);
    for (double v : spec.origin) os << ',' << format_double(v);
    os << '\n';

    const int d1 = mesh.num_directions();
    std::vector<int> multi(d1);
    for (int j = 0; j < mesh.num_levels(); ++j) {
        for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
            mesh.decode(node, multi);
            os << j;
            for (int c : multi) os << ',' << c;
            os << ',' << format_double(u.at(j, node)) << '\n';
        }
    }
}

void write_grid_csv(const std::string& path, const GridFunction& u) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_grid_csv(out, u);
}

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t line_no) {
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
        double v = 0.0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{})
            throw std::runtime_error("grid csv: malformed number on line " +
                                     std::to_string(line_no));
        row.push_back(v);
        p = next;
        if (p < end) {
            if (*p != ',')
                throw std::runtime_error("grid csv: expected ',' on line " +
                                         std::to_string(line_no));
            ++p;
        }
    }
    return row;
}

}  // namespace

GridFunction read_grid_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("grid csv: empty input");
    const std::vector<double> header = parse_row(line, 1);
    if (header.size() < 6) throw std::runtime_error("grid csv: short header");

    MeshSpec spec;
    spec.horizon = header[0];
    spec.tau = header[1];
    spec.h = header[2];
    const int d = static_cast<int>(header[3]);
    const int d1 = static_cast<int>(header[4]);
    spec.index_radius = static_cast<int>(header[5]);
    const std::size_t expected = 6 + static_cast<std::size_t>(d1) * d + d;
    if (header.size() != expected) throw std::runtime_error("grid csv: header size mismatch");
    std::size_t pos = 6;
    for (int k = 0; k < d1; ++k) {
        spec.directions.emplace_back(header.begin() + pos, header.begin() + pos + d);
        pos += d;
    }
    spec.origin.assign(header.begin() + pos, header.begin() + pos + d);

    auto mesh = std::make_shared<const Mesh>(build_mesh(spec));
    GridFunction u(mesh);
    std::vector<int> multi(d1);
    std::size_t line_no = 1;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<double> row = parse_row(line, line_no);
        if (row.size() != static_cast<std::size_t>(d1) + 2)
            throw std::runtime_error("grid csv: row size mismatch on line " +
                                     std::to_string(line_no));
        const int j = static_cast<int>(row[0]);
        if (j < 0 || j >= mesh->num_levels())
            throw std::runtime_error("grid csv: time level out of range on line " +
                                     std::to_string(line_no));
        for (int k = 0; k < d1; ++k) {
            multi[k] = static_cast<int>(row[k + 1]);
            if (std::abs(multi[k]) > spec.index_radius)
                throw std::runtime_error("grid csv: index out of range on line " +
                                         std::to_string(line_no));
        }
        u.at(j, mesh->encode(multi)) = row.back();
        ++rows;
    }
    const std::size_t want =
        static_cast<std::size_t>(mesh->num_levels()) * static_cast<std::size_t>(mesh->num_nodes());
    if (rows != want)
        throw std::runtime_error("grid csv: expected " + std::to_string(want) + " rows, got " +
                                 std::to_string(rows));
    return u;
}

GridFunction read_grid_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_grid_csv(in);
}

}  // namespace bellman
