#pragma once

#include <functional>
#include <limits>

#include "phsyn/types.hpp"

namespace phsyn {

/// Objective callback: returns f(x) and, when grad != nullptr, fills the
/// gradient at x.
using ObjectiveFn = std::function<double(const Vector& x, Vector* grad)>;

struct BfgsOptions {
    int max_iterations = 500;
    double grad_tol = 1e-8;  // on ||g||_inf relative to max(1, |f|)
    double f_target = -std::numeric_limits<double>::infinity();
    int max_line_search = 40;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
};

struct BfgsResult {
    Vector x;
    double f = 0.0;
    Vector grad;
    int iterations = 0;
    bool converged = false;
    bool line_search_failed = false;
};

/// Dense quasi-Newton minimization with backtracking line search. On
/// line-search failure the best iterate found is returned with the
/// line_search_failed flag set; no exception is thrown.
BfgsResult bfgs_minimize(const ObjectiveFn& fg, Vector x0,
                         const BfgsOptions& opts = {});

}  // namespace phsyn
