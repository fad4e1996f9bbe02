#include "douba/measures.hpp"

#include <algorithm>
#include <cmath>

#include "douba/rng.hpp"

namespace douba {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kAlignTol = 1e-9;

void require(bool cond, const char* msg) {
    if (!cond) throw InvalidInputError(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// BoxDomain

BoxDomain::BoxDomain(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    require(lo_.size() == hi_.size() && lo_.size() > 0, "box: lo/hi must share a positive length");
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
        require(lo_[i] < hi_[i], "box: lo[i] < hi[i] required (nonempty interior)");
    }
}

double BoxDomain::volume() const { return (hi_ - lo_).prod(); }

double BoxDomain::diameter() const { return (hi_ - lo_).norm(); }

bool BoxDomain::contains(const Eigen::Ref<const Vector>& x, double slack) const {
    if (x.size() != lo_.size()) return false;
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
        if (x[i] < lo_[i] - slack || x[i] > hi_[i] + slack) return false;
    }
    return true;
}

Vector BoxDomain::project(Vector x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo_[i], hi_[i]);
    return x;
}

bool BoxDomain::operator==(const BoxDomain& other) const {
    return lo_.size() == other.lo_.size() && lo_ == other.lo_ && hi_ == other.hi_;
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(BoxDomain domain, std::vector<int> cells_per_axis)
    : domain_(std::move(domain)), cells_(std::move(cells_per_axis)) {
    require(static_cast<int>(cells_.size()) == domain_.dim(),
            "grid: cells_per_axis length must equal the box dimension");
    long total = 1;
    for (int c : cells_) {
        require(c >= 1, "grid: cells_per_axis entries must be >= 1");
        total *= c;
        require(total <= (1L << 26), "grid: too many cells");
    }
    const int d = domain_.dim();
    Vector h(d);
    for (int a = 0; a < d; ++a) h[a] = (domain_.hi()[a] - domain_.lo()[a]) / cells_[a];
    cell_volume_ = h.prod();

    centers_.resize(total, d);
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (int a = d - 1; a >= 0; --a) {
            const long ia = rem % cells_[a];
            rem /= cells_[a];
            centers_(idx, a) = domain_.lo()[a] + (static_cast<double>(ia) + 0.5) * h[a];
        }
    }
}

DiscreteMeasure Grid::uniform_measure() const {
    return measure(Vector::Constant(cell_count(), 1.0 / cell_count()));
}

DiscreteMeasure Grid::measure(Vector weights) const {
    return DiscreteMeasure(centers_, std::move(weights), *this);
}

bool Grid::operator==(const Grid& other) const {
    return domain_ == other.domain_ && cells_ == other.cells_;
}

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(Matrix points, Vector weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    require(points_.rows() == weights_.size() && weights_.size() >= 1,
            "measure: points and weights must share a length >= 1");
    require((weights_.array() >= 0.0).all(), "measure: weights must be nonnegative");
    require(std::abs(weights_.sum() - 1.0) <= kWeightSumTol, "measure: weights must sum to 1");
}

DiscreteMeasure::DiscreteMeasure(Matrix points, Vector weights, Grid grid)
    : DiscreteMeasure(std::move(points), std::move(weights)) {
    if (points_.rows() != grid.cell_count() || points_.cols() != grid.domain().dim()) {
        throw DomainMismatchError("measure: atom layout does not match the grid");
    }
    const double scale = std::max(1.0, grid.centers().cwiseAbs().maxCoeff());
    if ((points_ - grid.centers()).cwiseAbs().maxCoeff() > kAlignTol * scale) {
        throw DomainMismatchError("measure: atoms are not aligned with the grid cell centers");
    }
    grid_ = std::move(grid);
}

DiscreteMeasure DiscreteMeasure::dirac(Vector x) {
    Matrix pts(1, x.size());
    pts.row(0) = x.transpose();
    return DiscreteMeasure(std::move(pts), Vector::Ones(1));
}

DiscreteMeasure DiscreteMeasure::with_grid(Grid grid) const {
    return DiscreteMeasure(points_, weights_, std::move(grid));
}

DiscreteMeasure DiscreteMeasure::without_grid() const {
    return DiscreteMeasure(points_, weights_);
}

// ---------------------------------------------------------------------------
// CostFunction

CostFunction CostFunction::squared_half() {
    return CostFunction(Kind::squared_half, nullptr, nullptr);
}

CostFunction CostFunction::custom(Eval eval, GradX grad_x) {
    if (!eval || !grad_x) throw InvalidInputError("cost: custom kind needs eval and grad_x");
    return CostFunction(Kind::custom, std::move(eval), std::move(grad_x));
}

double CostFunction::operator()(const Eigen::Ref<const Vector>& x,
                                const Eigen::Ref<const Vector>& y) const {
    if (kind_ == Kind::squared_half) return 0.5 * (y - x).squaredNorm();
    return eval_(x, y);
}

Vector CostFunction::grad_x(const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& y) const {
    if (kind_ == Kind::squared_half) return x - y;
    return grad_(x, y);
}

Matrix CostFunction::pairwise(const Matrix& X, const Matrix& Y) const {
    if (X.cols() != Y.cols()) throw DomainMismatchError("cost: mixed dimensions");
    Matrix C(X.rows(), Y.rows());
    if (kind_ == Kind::squared_half) {
        const int d = static_cast<int>(X.cols());
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                double s = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double t = Y(j, a) - X(i, a);
                    s += t * t;
                }
                C(i, j) = 0.5 * s;
            }
        }
    } else {
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                C(i, j) = eval_(X.row(i).transpose(), Y.row(j).transpose());
            }
        }
    }
    return C;
}

// ---------------------------------------------------------------------------
// Entropies

double entropy(const DiscreteMeasure& m) {
    if (!m.grid()) return kInf;  // not absolutely continuous by convention
    const double vol = m.grid()->cell_volume();
    double h = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        const double w = m.weights()[i];
        if (w > 0.0) h += w * std::log(w / vol);
    }
    return h;
}

namespace {

void check_shared_support(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) {
        throw DomainMismatchError("measures must share their atom locations");
    }
    const double scale = std::max(1.0, a.points().cwiseAbs().maxCoeff());
    if ((a.points() - b.points()).cwiseAbs().maxCoeff() > kAlignTol * scale) {
        throw DomainMismatchError("measures must share their atom locations");
    }
}

}  // namespace

double relative_entropy(const DiscreteMeasure& m, const DiscreteMeasure& ref) {
    check_shared_support(m, ref);
    double h = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        const double w = m.weights()[i];
        if (w <= 0.0) continue;
        const double r = ref.weights()[i];
        if (r <= 0.0) return kInf;  // absolute continuity fails
        h += w * std::log(w / r);
    }
    return h;
}

double tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    check_shared_support(a, b);
    return 0.5 * (a.weights() - b.weights()).lpNorm<1>();
}

// ---------------------------------------------------------------------------
// 1D quantile machinery

namespace {

// Atoms sorted by position with exact ties merged.
std::vector<std::pair<double, double>> sorted_atoms_1d(const DiscreteMeasure& m) {
    if (m.dim() != 1) throw InvalidInputError("operation requires 1-dimensional measures");
    std::vector<std::pair<double, double>> a;
    a.reserve(m.size());
    for (int i = 0; i < m.size(); ++i) a.emplace_back(m.points()(i, 0), m.weights()[i]);
    std::sort(a.begin(), a.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& [x, w] : a) {
        if (!merged.empty() && merged.back().first == x) {
            merged.back().second += w;
        } else {
            merged.emplace_back(x, w);
        }
    }
    return merged;
}

// Walks the merged quantile breakpoints of K step functions and hands each
// segment (length du, positions q_k) to the visitor. The running minimum of
// the cumulative sums always equals at least one entry exactly, so every
// pass either advances an index or terminates; rounding dust in the totals
// at most drops a zero-length tail.
template <typename Visit>
void sweep_quantiles(const std::vector<std::vector<std::pair<double, double>>>& atoms,
                     Visit&& visit) {
    const size_t K = atoms.size();
    std::vector<size_t> idx(K, 0);
    std::vector<double> cum(K);
    for (size_t k = 0; k < K; ++k) cum[k] = atoms[k][0].second;
    std::vector<double> q(K);
    double u_prev = 0.0;
    while (true) {
        double u = cum[0];
        for (size_t k = 1; k < K; ++k) u = std::min(u, cum[k]);
        for (size_t k = 0; k < K; ++k) q[k] = atoms[k][idx[k]].first;
        if (u > u_prev) visit(u - u_prev, q);
        bool advanced = false;
        for (size_t k = 0; k < K; ++k) {
            if (cum[k] <= u && idx[k] + 1 < atoms[k].size()) {
                ++idx[k];
                cum[k] += atoms[k][idx[k]].second;
                advanced = true;
            }
        }
        if (!advanced) break;
        u_prev = u;
    }
}

}  // namespace

double wasserstein2_1d(const DiscreteMeasure& m, const DiscreteMeasure& n) {
    std::vector<std::vector<std::pair<double, double>>> atoms{sorted_atoms_1d(m),
                                                              sorted_atoms_1d(n)};
    double s = 0.0;
    sweep_quantiles(atoms, [&](double du, const std::vector<double>& q) {
        const double t = q[0] - q[1];
        s += du * t * t;
    });
    return std::sqrt(std::max(0.0, s));
}

double wasserstein1_1d(const DiscreteMeasure& m, const DiscreteMeasure& n) {
    std::vector<std::vector<std::pair<double, double>>> atoms{sorted_atoms_1d(m),
                                                              sorted_atoms_1d(n)};
    double s = 0.0;
    sweep_quantiles(atoms, [&](double du, const std::vector<double>& q) {
        s += du * std::abs(q[0] - q[1]);
    });
    return s;
}

DiscreteMeasure quantile_barycenter_1d(const std::vector<DiscreteMeasure>& marginals,
                                       const Vector& weights) {
    if (marginals.empty()) throw InvalidInputError("quantile barycenter: empty marginal list");
    if (static_cast<Eigen::Index>(marginals.size()) != weights.size()) {
        throw InvalidInputError("quantile barycenter: weights length mismatch");
    }
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > kWeightSumTol) {
        throw InvalidInputError("quantile barycenter: weights must be nonnegative and sum to 1");
    }
    std::vector<std::vector<std::pair<double, double>>> atoms;
    atoms.reserve(marginals.size());
    for (const auto& m : marginals) atoms.push_back(sorted_atoms_1d(m));

    std::vector<double> xs, ws;
    sweep_quantiles(atoms, [&](double du, const std::vector<double>& q) {
        double x = 0.0;
        for (size_t k = 0; k < q.size(); ++k) x += weights[static_cast<Eigen::Index>(k)] * q[k];
        if (!xs.empty() && xs.back() == x) {
            ws.back() += du;
        } else {
            xs.push_back(x);
            ws.push_back(du);
        }
    });

    Matrix pts(xs.size(), 1);
    Vector w(ws.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        pts(static_cast<Eigen::Index>(i), 0) = xs[i];
        w[static_cast<Eigen::Index>(i)] = ws[i];
    }
    w /= w.sum();
    return DiscreteMeasure(std::move(pts), std::move(w));
}

DiscreteMeasure sample(const DiscreteMeasure& m, int count, std::uint64_t seed) {
    if (count < 1) throw InvalidInputError("sample: count must be >= 1");
    Vector cum(m.size());
    double acc = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        acc += m.weights()[i];
        cum[i] = acc;
    }
    Rng rng(seed);
    Matrix pts(count, m.dim());
    for (int s = 0; s < count; ++s) {
        const double u = rng.uniform01() * acc;
        int lo = 0, hi = m.size() - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (cum[mid] > u) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        pts.row(s) = m.points().row(lo);
    }
    return DiscreteMeasure(std::move(pts), Vector::Constant(count, 1.0 / count));
}

}  // namespace douba
