#include "krp/quad.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace krp {

namespace {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1] (positive half; symmetric).
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct CellEval {
    double integral;
    double error;
};

CellEval gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fk[15];
    for (int i = 0; i < 7; ++i) {
        fk[i] = f(c - h * kXgk[i]);
        fk[14 - i] = f(c + h * kXgk[i]);
    }
    fk[7] = f(c);
    double resk = 0.0;
    for (int i = 0; i < 7; ++i) resk += kWgk[i] * (fk[i] + fk[14 - i]);
    resk += kWgk[7] * fk[7];
    double resg = kWg[3] * fk[7];
    for (int i = 0; i < 3; ++i) resg += kWg[i] * (fk[2 * i + 1] + fk[13 - 2 * i]);
    resk *= h;
    resg *= h;
    double err = std::abs(resk - resg);
    // quadpack-style error sharpening
    double resabs = 0.0;
    for (int i = 0; i < 7; ++i) resabs += kWgk[i] * (std::abs(fk[i]) + std::abs(fk[14 - i]));
    resabs += kWgk[7] * std::abs(fk[7]);
    resabs *= std::abs(h);
    if (resabs > 0.0 && err > 0.0) {
        double scale = std::pow(200.0 * err / resabs, 1.5);
        err = resabs * std::min(1.0, scale);
    }
    return {resk, err};
}

struct HeapCell {
    double a, b, integral, error;
    bool operator<(const HeapCell& o) const { return error < o.error; }
};

} // namespace

QuadResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                       double rtol, double atol, std::size_t max_cells) {
    QuadResult res;
    if (!(b > a)) {
        res.converged = true;
        return res;
    }
    std::priority_queue<HeapCell> heap;
    CellEval e0 = gk15(f, a, b);
    res.evals = 15;
    heap.push({a, b, e0.integral, e0.error});
    double total = e0.integral;
    double toterr = e0.error;
    std::size_t cells = 1;
    while (cells < max_cells) {
        double tol = std::max(atol, rtol * std::abs(total));
        if (toterr <= tol) break;
        HeapCell worst = heap.top();
        if (worst.error <= tol / static_cast<double>(4 * cells)) break;
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {  // interval at rounding limit
            heap.push(worst);
            break;
        }
        CellEval l = gk15(f, worst.a, mid);
        CellEval r = gk15(f, mid, worst.b);
        res.evals += 30;
        total += l.integral + r.integral - worst.integral;
        toterr += l.error + r.error - worst.error;
        heap.push({worst.a, mid, l.integral, l.error});
        heap.push({mid, worst.b, r.integral, r.error});
        ++cells;
    }
    res.value = total;
    res.abs_error = toterr;
    res.converged = toterr <= std::max(atol, rtol * std::abs(total));
    return res;
}

QuadResult integrate_power_weighted(const std::function<double(double)>& f, double gamma,
                                    double b, double rtol, double atol) {
    if (gamma <= -1.0) throw std::invalid_argument("integrate_power_weighted: gamma <= -1");
    if (b <= 0.0) return {0.0, 0.0, 0, true};
    const double g1 = gamma + 1.0;
    const double ub = std::pow(b, g1) / g1;
    auto sub = [&](double u) {
        double x = std::pow(g1 * u, 1.0 / g1);
        return f(x);
    };
    return adaptive_gk(sub, 0.0, ub, rtol, atol);
}

QuadResult integrate_tail_shells(const std::function<double(double)>& f, double gamma,
                                 double b, double rtol, double atol, int max_shells) {
    QuadResult res;
    double lo = b;
    double total = 0.0, toterr = 0.0;
    double last_inc = 0.0;
    bool stopped = false;
    for (int k = 0; k < max_shells; ++k) {
        double hi = lo * 2.0;
        auto wf = [&](double x) { return std::pow(x, gamma) * f(x); };
        QuadResult shell = adaptive_gk(wf, lo, hi, rtol, 0.0, 400);
        res.evals += shell.evals;
        total += shell.value;
        toterr += shell.abs_error;
        last_inc = std::abs(shell.value);
        double tol = std::max(atol, rtol * std::abs(total));
        if (k >= 2 && last_inc <= 0.25 * tol) {
            stopped = true;
            break;
        }
        lo = hi;
    }
    res.value = total;
    // an unconverged geometric tail shows up here instead of being dropped silently
    res.abs_error = toterr + (stopped ? last_inc : 4.0 * last_inc);
    res.converged = stopped;
    return res;
}

QuadResult integrate_weighted_halfline(const std::function<double(double)>& f, double gamma,
                                       double split, double rtol, double atol) {
    QuadResult core = integrate_power_weighted(f, gamma, split, rtol, atol);
    QuadResult tail = integrate_tail_shells(f, gamma, split, rtol,
                                            std::max(atol, 0.1 * rtol * std::abs(core.value)));
    QuadResult res;
    res.value = core.value + tail.value;
    res.abs_error = core.abs_error + tail.abs_error;
    res.evals = core.evals + tail.evals;
    res.converged = core.converged && tail.converged;
    return res;
}

SlopeFit slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("slope_fit: need matching vectors, size >= 2");
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("slope_fit: degenerate abscissae");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (fit.slope * x[i] + fit.intercept);
        ss_res += r * r;
    }
    fit.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    if (n > 2) fit.slope_stderr = std::sqrt(ss_res / ((n - 2) * sxx));
    return fit;
}

namespace {

QuadResult integrate_singular_rec(const std::function<double(const double*)>& f,
                                  const std::vector<AxisWeight>& axes, std::size_t axis,
                                  double* point, double rtol) {
    const AxisWeight& ax = axes[axis];
    const bool last = (axis + 1 == axes.size());
    std::size_t evals_children = 0;
    auto eval_rest = [&](double x) {
        point[axis] = x;
        if (last) return f(point);
        QuadResult inner = integrate_singular_rec(f, axes, axis + 1, point, rtol * 0.3);
        evals_children += inner.evals;
        return inner.value;
    };
    QuadResult res;
    if (std::isinf(ax.upper)) {
        res = integrate_weighted_halfline(eval_rest, ax.gamma, ax.split, rtol);
    } else {
        res = integrate_power_weighted(eval_rest, ax.gamma, ax.upper, rtol);
    }
    res.evals += evals_children;
    return res;
}

} // namespace

QuadResult integrate_singular(const std::function<double(const double*)>& f,
                              const std::vector<AxisWeight>& axes, double rtol) {
    if (axes.empty()) throw std::invalid_argument("integrate_singular: no axes");
    if (axes.size() > 4) throw std::invalid_argument("integrate_singular: dim > 4 unsupported");
    std::vector<double> point(axes.size(), 0.0);
    return integrate_singular_rec(f, axes, 0, point.data(), rtol);
}

} // namespace krp
