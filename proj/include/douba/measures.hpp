#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "douba/errors.hpp"
#include "douba/numerics.hpp"

namespace douba {

class DiscreteMeasure;

// Axis-aligned box with nonempty interior; the ambient domain for every
// measure, grid and particle system in this library.
class BoxDomain {
public:
    BoxDomain(Vector lo, Vector hi);

    int dim() const { return static_cast<int>(lo_.size()); }
    const Vector& lo() const { return lo_; }
    const Vector& hi() const { return hi_; }

    double volume() const;
    double diameter() const;  // Euclidean diameter
    bool contains(const Eigen::Ref<const Vector>& x, double slack = 0.0) const;

    // Componentwise clamp: the Euclidean projection onto the box.
    Vector project(Vector x) const;

    bool operator==(const BoxDomain& other) const;

private:
    Vector lo_, hi_;
};

// Regular midpoint grid over a box. Cell centers are enumerated with axis 0
// slowest. A grid both discretizes the Lebesgue measure (uniform weights) and
// tags DiscreteMeasures whose atoms sit at its cell centers.
class Grid {
public:
    Grid(BoxDomain domain, std::vector<int> cells_per_axis);

    const BoxDomain& domain() const { return domain_; }
    const std::vector<int>& cells_per_axis() const { return cells_; }
    int cell_count() const { return static_cast<int>(centers_.rows()); }
    double cell_volume() const { return cell_volume_; }
    const Matrix& centers() const { return centers_; }

    // Uniform weights: the normalized Lebesgue measure on the box.
    DiscreteMeasure uniform_measure() const;
    // Grid measure with the given cell weights (normalized to sum 1 by caller).
    DiscreteMeasure measure(Vector weights) const;

    bool operator==(const Grid& other) const;

private:
    BoxDomain domain_;
    std::vector<int> cells_;
    Matrix centers_;  // cell_count x d
    double cell_volume_;
};

// Weighted atoms: the universal measure representation. Marginals, grid
// densities and particle clouds all reduce to this. Immutable once built.
class DiscreteMeasure {
public:
    // points: n x d, weights: n nonnegative entries summing to 1 within 1e-12.
    DiscreteMeasure(Matrix points, Vector weights);
    // Grid-tagged variant; atoms must coincide with the grid cell centers.
    DiscreteMeasure(Matrix points, Vector weights, Grid grid);

    static DiscreteMeasure dirac(Vector x);

    int size() const { return static_cast<int>(weights_.size()); }
    int dim() const { return static_cast<int>(points_.cols()); }
    const Matrix& points() const { return points_; }
    const Vector& weights() const { return weights_; }
    const std::optional<Grid>& grid() const { return grid_; }

    DiscreteMeasure with_grid(Grid grid) const;
    DiscreteMeasure without_grid() const;

private:
    Matrix points_;
    Vector weights_;
    std::optional<Grid> grid_;
};

// Ground cost c(x, y) with its spatial gradient. The squared_half kind is
// c(x,y) = 0.5*|y-x|^2 with grad_x c = x - y, evaluated exactly.
class CostFunction {
public:
    enum class Kind { squared_half, custom };

    using Eval =
        std::function<double(const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&)>;
    using GradX =
        std::function<Vector(const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&)>;

    static CostFunction squared_half();
    static CostFunction custom(Eval eval, GradX grad_x);

    double operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) const;
    Vector grad_x(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) const;
    Kind kind() const { return kind_; }

    // Cost matrix C(i,j) = c(X.row(i), Y.row(j)).
    Matrix pairwise(const Matrix& X, const Matrix& Y) const;

private:
    CostFunction(Kind kind, Eval eval, GradX grad) : kind_(kind), eval_(eval), grad_(grad) {}

    Kind kind_;
    Eval eval_;
    GradX grad_;
};

// Discrete evaluation of H(mu) = int log(dmu/dx) dmu on the tagged grid:
// sum_i w_i log(w_i / cell_volume), empty cells contributing 0. Measures
// without a grid tag are not absolutely continuous here, so H = +inf.
double entropy(const DiscreteMeasure& m);

// H(m | ref) = sum_i w_i log(w_i / r_i) over shared atoms; +inf when m puts
// mass where ref has none.
double relative_entropy(const DiscreteMeasure& m, const DiscreteMeasure& ref);

// Total variation distance 0.5 * sum_i |w_i - r_i| over shared atoms.
double tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

// Exact 1D Wasserstein distances via the quantile coupling.
double wasserstein2_1d(const DiscreteMeasure& m, const DiscreteMeasure& n);
double wasserstein1_1d(const DiscreteMeasure& m, const DiscreteMeasure& n);

// Exact unregularized 1D barycenter: the quantile function of the output is
// the weighted average of the marginal quantile functions.
DiscreteMeasure quantile_barycenter_1d(const std::vector<DiscreteMeasure>& marginals,
                                       const Vector& weights);

// Empirical measure of `count` i.i.d. draws; uniform weights 1/count.
// Deterministic given the seed.
DiscreteMeasure sample(const DiscreteMeasure& m, int count, std::uint64_t seed);

}  // namespace douba
