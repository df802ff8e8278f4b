#include "sobex/field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace sobex {

double p_norm(const ScalarField& u, const std::vector<CellIndex>& cells, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (CellIndex i : cells) m = std::max(m, std::abs(u[i]));
        return m;
    }
    const double w = u.cell_measure();
    double s = 0.0;
    for (CellIndex i : cells) s += std::pow(std::abs(u[i]), p) * w;
    return std::pow(s, 1.0 / p);
}

namespace {
template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

void write_header(std::ofstream& out, const GridSpec& g) {
    out.write("SOBEXFLD", 8);
    put<std::uint32_t>(out, std::uint32_t(g.dim()));
    for (int a = 0; a < g.dim(); ++a) put<std::uint32_t>(out, std::uint32_t(g.extent(a)));
    for (int a = 0; a < g.dim(); ++a) put<double>(out, g.origin()[std::size_t(a)]);
    put<double>(out, g.spacing());
}

GridSpec read_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, "SOBEXFLD", 8) != 0) throw std::runtime_error("bad field magic in " + path);
    const int n = int(get<std::uint32_t>(in));
    std::vector<std::int64_t> extents(static_cast<std::size_t>(n));
    for (auto& e : extents) e = std::int64_t(get<std::uint32_t>(in));
    std::vector<double> origin(static_cast<std::size_t>(n));
    for (auto& o : origin) o = get<double>(in);
    double spacing = get<double>(in);
    return GridSpec(origin, spacing, extents);
}
} // namespace

void write_field(const ScalarField& u, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    write_header(out, u.grid);
    out.write(reinterpret_cast<const char*>(u.values.data()),
              std::streamsize(u.values.size() * sizeof(double)));
}

ScalarField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    ScalarField u(read_header(in, path));
    in.read(reinterpret_cast<char*>(u.values.data()),
            std::streamsize(u.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated field file: " + path);
    return u;
}

void write_field_csv(const ScalarField& u, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.precision(17);
    const int n = u.grid.dim();
    for (int a = 0; a < n; ++a) out << "x" << a << ",";
    out << "value\n";
    for (CellIndex i = 0; i < u.grid.total_cells(); ++i) {
        CellCoord c = u.grid.decode(i);
        for (int a = 0; a < n; ++a) out << u.grid.center_coord(c[a], a) << ",";
        out << u[i] << "\n";
    }
}

void write_product_field(const std::vector<double>& values, const GridSpec& gx, const GridSpec& gy,
                         const std::string& path) {
    if (std::abs(gx.spacing() - gy.spacing()) > 1e-12 * gx.spacing())
        throw std::invalid_argument("product field export requires equal factor spacings");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write("SOBEXFLD", 8);
    const int n = gx.dim(), m = gy.dim();
    put<std::uint32_t>(out, std::uint32_t(n + m));
    for (int a = 0; a < n; ++a) put<std::uint32_t>(out, std::uint32_t(gx.extent(a)));
    for (int a = 0; a < m; ++a) put<std::uint32_t>(out, std::uint32_t(gy.extent(a)));
    for (int a = 0; a < n; ++a) put<double>(out, gx.origin()[std::size_t(a)]);
    for (int a = 0; a < m; ++a) put<double>(out, gy.origin()[std::size_t(a)]);
    put<double>(out, gx.spacing());
    put<std::uint32_t>(out, std::uint32_t(n)); // split index
    out.write(reinterpret_cast<const char*>(values.data()),
              std::streamsize(values.size() * sizeof(double)));
}

ProductFieldRaw read_product_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, "SOBEXFLD", 8) != 0) throw std::runtime_error("bad field magic in " + path);
    const int total_dim = int(get<std::uint32_t>(in));
    std::vector<std::int64_t> extents(static_cast<std::size_t>(total_dim));
    for (auto& e : extents) e = std::int64_t(get<std::uint32_t>(in));
    std::vector<double> origin(static_cast<std::size_t>(total_dim));
    for (auto& o : origin) o = get<double>(in);
    double spacing = get<double>(in);
    const int n = int(get<std::uint32_t>(in));
    if (n <= 0 || n >= total_dim) throw std::runtime_error("bad split index in " + path);
    ProductFieldRaw raw;
    raw.gx = GridSpec(std::vector<double>(origin.begin(), origin.begin() + n), spacing,
                      std::vector<std::int64_t>(extents.begin(), extents.begin() + n));
    raw.gy = GridSpec(std::vector<double>(origin.begin() + n, origin.end()), spacing,
                      std::vector<std::int64_t>(extents.begin() + n, extents.end()));
    raw.values.resize(std::size_t(raw.gx.total_cells() * raw.gy.total_cells()));
    in.read(reinterpret_cast<char*>(raw.values.data()),
            std::streamsize(raw.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated field file: " + path);
    return raw;
}

} // namespace sobex
