#include "sobex/mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "sobex/errors.hpp"

namespace sobex {

DomainMask::DomainMask(GridSpec grid, std::vector<std::uint8_t> state)
    : grid_(std::move(grid)), state_(std::move(state)) {
    if (std::int64_t(state_.size()) != grid_.total_cells())
        throw std::invalid_argument("DomainMask: state size mismatch");
    for (CellIndex i = 0; i < grid_.total_cells(); ++i) {
        if (state_[std::size_t(i)] >= 1) closed_cells_.push_back(i);
        if (state_[std::size_t(i)] == 2) open_cells_.push_back(i);
    }
}

double DomainMask::open_measure() const {
    return double(open_cells_.size()) * std::pow(grid_.spacing(), grid_.dim());
}

double DomainMask::closed_measure() const {
    return double(closed_cells_.size()) * std::pow(grid_.spacing(), grid_.dim());
}

double DomainMask::closed_diam() const {
    const int n = grid_.dim();
    std::vector<std::int64_t> lo(static_cast<std::size_t>(n), std::numeric_limits<std::int64_t>::max());
    std::vector<std::int64_t> hi(static_cast<std::size_t>(n), std::numeric_limits<std::int64_t>::min());
    for (CellIndex i : closed_cells_) {
        CellCoord c = grid_.decode(i);
        for (int a = 0; a < n; ++a) {
            lo[std::size_t(a)] = std::min(lo[std::size_t(a)], c[a]);
            hi[std::size_t(a)] = std::max(hi[std::size_t(a)], c[a]);
        }
    }
    std::int64_t w = 0;
    for (int a = 0; a < n; ++a) w = std::max(w, hi[std::size_t(a)] - lo[std::size_t(a)] + 1);
    return double(w) * grid_.spacing();
}

std::vector<double> DomainMask::closed_bbox_center() const {
    const int n = grid_.dim();
    std::vector<std::int64_t> lo(static_cast<std::size_t>(n), std::numeric_limits<std::int64_t>::max());
    std::vector<std::int64_t> hi(static_cast<std::size_t>(n), std::numeric_limits<std::int64_t>::min());
    for (CellIndex i : closed_cells_) {
        CellCoord c = grid_.decode(i);
        for (int a = 0; a < n; ++a) {
            lo[std::size_t(a)] = std::min(lo[std::size_t(a)], c[a]);
            hi[std::size_t(a)] = std::max(hi[std::size_t(a)], c[a]);
        }
    }
    std::vector<double> ctr(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
        ctr[std::size_t(a)] = 0.5 * (grid_.center_coord(lo[std::size_t(a)], a) +
                                     grid_.center_coord(hi[std::size_t(a)], a));
    return ctr;
}

std::vector<std::int32_t> DomainMask::open_components(int& count) const {
    std::vector<std::int32_t> comp(state_.size(), -1);
    count = 0;
    const int n = grid_.dim();
    std::deque<CellIndex> queue;
    for (CellIndex seed : open_cells_) {
        if (comp[std::size_t(seed)] >= 0) continue;
        comp[std::size_t(seed)] = count;
        queue.push_back(seed);
        while (!queue.empty()) {
            CellIndex cur = queue.front();
            queue.pop_front();
            CellCoord c = grid_.decode(cur);
            // full 3^n - 1 neighborhood
            CellCoord nb = c;
            std::array<int, kMaxDim> d{};
            for (int a = 0; a < n; ++a) d[std::size_t(a)] = -1;
            while (true) {
                bool all_zero = true;
                for (int a = 0; a < n; ++a) {
                    nb[a] = c[a] + d[std::size_t(a)];
                    if (d[std::size_t(a)] != 0) all_zero = false;
                }
                if (!all_zero && grid_.in_bounds(nb)) {
                    CellIndex ni = grid_.linear(nb);
                    if (state_[std::size_t(ni)] == 2 && comp[std::size_t(ni)] < 0) {
                        comp[std::size_t(ni)] = count;
                        queue.push_back(ni);
                    }
                }
                int a = 0;
                for (; a < n; ++a) {
                    if (++d[std::size_t(a)] <= 1) break;
                    d[std::size_t(a)] = -1;
                }
                if (a == n) break;
            }
        }
        ++count;
    }
    return comp;
}

std::uint64_t DomainMask::content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint8_t b : state_) {
        h ^= b;
        h *= 1099511628211ull;
    }
    // fold in geometry so identical bitmaps on different grids differ
    auto mix = [&h](std::uint64_t x) { h ^= x; h *= 1099511628211ull; };
    mix(std::uint64_t(grid_.dim()));
    for (auto e : grid_.extents()) mix(std::uint64_t(e));
    std::uint64_t sp;
    double s = grid_.spacing();
    std::memcpy(&sp, &s, 8);
    mix(sp);
    return h;
}

// ---------------------------------------------------------------- shapes

namespace {

class BoxShape final : public ShapeExpr {
public:
    BoxShape(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {}
    bool contains_open(std::span<const double> x) const override {
        for (std::size_t a = 0; a < lo_.size(); ++a)
            if (!(x[a] > lo_[a] && x[a] < hi_[a])) return false;
        return true;
    }
    bool contains_closed(std::span<const double> x) const override {
        for (std::size_t a = 0; a < lo_.size(); ++a)
            if (!(x[a] >= lo_[a] && x[a] <= hi_[a])) return false;
        return true;
    }
    void bounding_box(std::vector<double>& lo, std::vector<double>& hi) const override {
        lo = lo_;
        hi = hi_;
    }

private:
    std::vector<double> lo_, hi_;
};

class BallShape final : public ShapeExpr {
public:
    BallShape(std::vector<double> c, double r) : c_(std::move(c)), r_(r) {}
    double dist2(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t a = 0; a < c_.size(); ++a) {
            double d = x[a] - c_[a];
            s += d * d;
        }
        return s;
    }
    bool contains_open(std::span<const double> x) const override { return dist2(x) < r_ * r_; }
    bool contains_closed(std::span<const double> x) const override { return dist2(x) <= r_ * r_; }
    void bounding_box(std::vector<double>& lo, std::vector<double>& hi) const override {
        lo.resize(c_.size());
        hi.resize(c_.size());
        for (std::size_t a = 0; a < c_.size(); ++a) {
            lo[a] = c_[a] - r_;
            hi[a] = c_[a] + r_;
        }
    }

private:
    std::vector<double> c_;
    double r_;
};

class HalfPlaneShape final : public ShapeExpr {
public:
    HalfPlaneShape(std::vector<double> normal, double offset) : n_(std::move(normal)), b_(offset) {}
    double lhs(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t a = 0; a < n_.size(); ++a) s += n_[a] * x[a];
        return s;
    }
    bool contains_open(std::span<const double> x) const override { return lhs(x) < b_; }
    bool contains_closed(std::span<const double> x) const override { return lhs(x) <= b_; }
    void bounding_box(std::vector<double>& lo, std::vector<double>& hi) const override {
        // unbounded; caller must supply the grid
        lo.assign(n_.size(), -std::numeric_limits<double>::infinity());
        hi.assign(n_.size(), std::numeric_limits<double>::infinity());
    }

private:
    std::vector<double> n_;
    double b_;
};

class PolygonShape final : public ShapeExpr {
public:
    explicit PolygonShape(std::vector<std::array<double, 2>> pts) : pts_(std::move(pts)) {
        if (pts_.size() < 3) throw std::invalid_argument("polygon needs >= 3 points");
    }
    // crossing-number test; boundary points count as closed only
    bool inside(std::span<const double> x) const {
        bool in = false;
        std::size_t m = pts_.size();
        for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
            const auto& pi = pts_[i];
            const auto& pj = pts_[j];
            if ((pi[1] > x[1]) != (pj[1] > x[1])) {
                double t = (x[1] - pi[1]) / (pj[1] - pi[1]);
                double xc = pi[0] + t * (pj[0] - pi[0]);
                if (x[0] < xc) in = !in;
            }
        }
        return in;
    }
    bool contains_open(std::span<const double> x) const override { return inside(x); }
    bool contains_closed(std::span<const double> x) const override { return inside(x); }
    void bounding_box(std::vector<double>& lo, std::vector<double>& hi) const override {
        lo = {pts_[0][0], pts_[0][1]};
        hi = lo;
        for (const auto& p : pts_) {
            lo[0] = std::min(lo[0], p[0]);
            lo[1] = std::min(lo[1], p[1]);
            hi[0] = std::max(hi[0], p[0]);
            hi[1] = std::max(hi[1], p[1]);
        }
    }

private:
    std::vector<std::array<double, 2>> pts_;
};

enum class CsgOp { Union, Intersection, Difference };

class CsgShape final : public ShapeExpr {
public:
    CsgShape(CsgOp op, std::vector<std::shared_ptr<const ShapeExpr>> args) : op_(op), args_(std::move(args)) {
        if (args_.empty()) throw std::invalid_argument("csg op needs arguments");
    }
    bool contains_open(std::span<const double> x) const override {
        switch (op_) {
            case CsgOp::Union:
                for (const auto& a : args_) if (a->contains_open(x)) return true;
                return false;
            case CsgOp::Intersection:
                for (const auto& a : args_) if (!a->contains_open(x)) return false;
                return true;
            case CsgOp::Difference: {
                if (!args_[0]->contains_open(x)) return false;
                for (std::size_t i = 1; i < args_.size(); ++i)
                    if (args_[i]->contains_closed(x)) return false;
                return true;
            }
        }
        return false;
    }
    bool contains_closed(std::span<const double> x) const override {
        switch (op_) {
            case CsgOp::Union:
                for (const auto& a : args_) if (a->contains_closed(x)) return true;
                return false;
            case CsgOp::Intersection:
                for (const auto& a : args_) if (!a->contains_closed(x)) return false;
                return true;
            case CsgOp::Difference: {
                if (!args_[0]->contains_closed(x)) return false;
                for (std::size_t i = 1; i < args_.size(); ++i)
                    if (args_[i]->contains_open(x)) return false;
                return true;
            }
        }
        return false;
    }
    void bounding_box(std::vector<double>& lo, std::vector<double>& hi) const override {
        args_[0]->bounding_box(lo, hi);
        if (op_ == CsgOp::Union) {
            std::vector<double> l2, h2;
            for (std::size_t i = 1; i < args_.size(); ++i) {
                args_[i]->bounding_box(l2, h2);
                for (std::size_t a = 0; a < lo.size(); ++a) {
                    lo[a] = std::min(lo[a], l2[a]);
                    hi[a] = std::max(hi[a], h2[a]);
                }
            }
        } else if (op_ == CsgOp::Intersection) {
            std::vector<double> l2, h2;
            for (std::size_t i = 1; i < args_.size(); ++i) {
                args_[i]->bounding_box(l2, h2);
                for (std::size_t a = 0; a < lo.size(); ++a) {
                    lo[a] = std::max(lo[a], l2[a]);
                    hi[a] = std::min(hi[a], h2[a]);
                }
            }
        }
        // difference keeps the first argument's box
    }

private:
    CsgOp op_;
    std::vector<std::shared_ptr<const ShapeExpr>> args_;
};

std::shared_ptr<const ShapeExpr> parse_node(const nlohmann::json& j) {
    if (j.contains("prim")) {
        const std::string prim = j.at("prim").get<std::string>();
        if (prim == "box")
            return std::make_shared<BoxShape>(j.at("lo").get<std::vector<double>>(),
                                              j.at("hi").get<std::vector<double>>());
        if (prim == "ball")
            return std::make_shared<BallShape>(j.at("c").get<std::vector<double>>(),
                                               j.at("r").get<double>());
        if (prim == "halfplane")
            return std::make_shared<HalfPlaneShape>(j.at("normal").get<std::vector<double>>(),
                                                    j.at("offset").get<double>());
        if (prim == "polygon") {
            std::vector<std::array<double, 2>> pts;
            for (const auto& p : j.at("pts")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            return std::make_shared<PolygonShape>(std::move(pts));
        }
        throw std::invalid_argument("unknown primitive: " + prim);
    }
    if (j.contains("op")) {
        const std::string op = j.at("op").get<std::string>();
        CsgOp o;
        if (op == "union") o = CsgOp::Union;
        else if (op == "intersection") o = CsgOp::Intersection;
        else if (op == "difference") o = CsgOp::Difference;
        else throw std::invalid_argument("unknown op: " + op);
        std::vector<std::shared_ptr<const ShapeExpr>> args;
        for (const auto& a : j.at("args")) args.push_back(parse_node(a));
        return std::make_shared<CsgShape>(o, std::move(args));
    }
    throw std::invalid_argument("shape node needs 'prim' or 'op'");
}

} // namespace

std::shared_ptr<const ShapeExpr> parse_shape_json(const std::string& json_text) {
    return parse_node(nlohmann::json::parse(json_text));
}

std::shared_ptr<const ShapeExpr> load_shape_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open shape file: " + path);
    nlohmann::json j;
    in >> j;
    return parse_node(j);
}

DomainMask rasterize(const ShapeExpr& shape, const GridSpec& grid) {
    const std::int64_t total = grid.total_cells();
    const int n = grid.dim();
    std::vector<std::uint8_t> state(std::size_t(total), 0);
    std::int64_t open_count = 0;

#pragma omp parallel for schedule(static) reduction(+ : open_count)
    for (std::int64_t i = 0; i < total; ++i) {
        std::array<double, kMaxDim> p;
        CellCoord c = grid.decode(i);
        for (int a = 0; a < n; ++a) p[std::size_t(a)] = grid.center_coord(c[a], a);
        if (shape.contains_open(std::span<const double>(p.data(), std::size_t(n)))) {
            state[std::size_t(i)] = 2;
            ++open_count;
        }
    }
    if (open_count == 0) throw empty_domain_error("rasterize: shape misses the grid (no open cells)");

    // closed = open + one layer of 3^n neighbors
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) {
        if (state[std::size_t(i)] == 2) continue;
        CellCoord c = grid.decode(i);
        CellCoord nb = c;
        std::array<int, kMaxDim> d{};
        for (int a = 0; a < n; ++a) d[std::size_t(a)] = -1;
        bool touches = false;
        while (!touches) {
            bool all_zero = true;
            for (int a = 0; a < n; ++a) {
                nb[a] = c[a] + d[std::size_t(a)];
                if (d[std::size_t(a)] != 0) all_zero = false;
            }
            if (!all_zero && grid.in_bounds(nb) && state[std::size_t(grid.linear(nb))] == 2)
                touches = true;
            int a = 0;
            for (; a < n; ++a) {
                if (++d[std::size_t(a)] <= 1) break;
                d[std::size_t(a)] = -1;
            }
            if (a == n) break;
        }
        if (touches) state[std::size_t(i)] = 1;
    }
    return DomainMask(grid, std::move(state));
}

// ------------------------------------------------------------------- IO

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
} // namespace

void write_mask(const DomainMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write("SOBEXMSK", 8);
    const GridSpec& g = mask.grid();
    put<std::uint32_t>(out, std::uint32_t(g.dim()));
    for (int a = 0; a < g.dim(); ++a) put<std::uint32_t>(out, std::uint32_t(g.extent(a)));
    for (int a = 0; a < g.dim(); ++a) put<double>(out, g.origin()[std::size_t(a)]);
    put<double>(out, g.spacing());
    out.write(reinterpret_cast<const char*>(mask.state().data()), std::streamsize(mask.state().size()));
}

DomainMask read_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, "SOBEXMSK", 8) != 0) throw std::runtime_error("bad mask magic in " + path);
    const int n = int(get<std::uint32_t>(in));
    std::vector<std::int64_t> extents(static_cast<std::size_t>(n));
    for (auto& e : extents) e = std::int64_t(get<std::uint32_t>(in));
    std::vector<double> origin(static_cast<std::size_t>(n));
    for (auto& o : origin) o = get<double>(in);
    double spacing = get<double>(in);
    GridSpec g(origin, spacing, extents);
    std::vector<std::uint8_t> state(static_cast<std::size_t>(g.total_cells()));
    in.read(reinterpret_cast<char*>(state.data()), std::streamsize(state.size()));
    if (!in) throw std::runtime_error("truncated mask file: " + path);
    return DomainMask(std::move(g), std::move(state));
}

void write_mask_pgm(const DomainMask& mask, const std::string& path) {
    if (mask.grid().dim() != 2) throw std::invalid_argument("PGM export is 2-D only");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    const std::int64_t nx = mask.grid().extent(0), ny = mask.grid().extent(1);
    out << "P5\n" << nx << " " << ny << "\n255\n";
    // image rows top-to-bottom = decreasing axis-1 index
    for (std::int64_t j = ny - 1; j >= 0; --j)
        for (std::int64_t i = 0; i < nx; ++i) {
            CellCoord c;
            c.dim = 2;
            c[0] = i;
            c[1] = j;
            std::uint8_t s = mask.state()[std::size_t(mask.grid().linear(c))];
            std::uint8_t px = s == 2 ? 255 : (s == 1 ? 128 : 0);
            out.write(reinterpret_cast<const char*>(&px), 1);
        }
}

} // namespace sobex
