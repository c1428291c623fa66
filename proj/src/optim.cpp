#include "phsyn/optim.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "phsyn/parallel.hpp"

namespace phsyn {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int num_threads() { return g_threads.load(); }

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(num_threads(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

BfgsResult bfgs_minimize(const ObjectiveFn& fg, Vector x0,
                         const BfgsOptions& opts) {
    const int n = static_cast<int>(x0.size());
    BfgsResult res;
    res.x = std::move(x0);
    res.grad.resize(n);
    res.f = fg(res.x, &res.grad);
    res.iterations = 0;

    Matrix Hinv = Matrix::Identity(n, n);
    Vector best_x = res.x;
    double best_f = res.f;

    auto grad_small = [&](double f, const Vector& g) {
        return g.lpNorm<Eigen::Infinity>() <=
               opts.grad_tol * std::max(1.0, std::abs(f));
    };

    while (res.iterations < opts.max_iterations) {
        if (grad_small(res.f, res.grad) || res.f <= opts.f_target) {
            res.converged = true;
            break;
        }

        Vector dir = -(Hinv * res.grad);
        double slope = dir.dot(res.grad);
        if (!(slope < 0.0)) {  // reset on loss of descent
            Hinv.setIdentity();
            dir = -res.grad;
            slope = dir.dot(res.grad);
            if (!(slope < 0.0)) {
                res.converged = true;  // gradient numerically zero
                break;
            }
        }

        // Backtracking line search with the sufficient-decrease condition.
        double step = 1.0;
        double f_new = 0.0;
        Vector x_new, g_new(n);
        bool accepted = false;
        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            x_new = res.x + step * dir;
            f_new = fg(x_new, &g_new);
            if (std::isfinite(f_new) &&
                f_new <= res.f + opts.armijo_c * step * slope) {
                accepted = true;
                break;
            }
            step *= opts.backtrack;
        }
        ++res.iterations;
        if (!accepted) {
            res.line_search_failed = true;
            break;
        }

        const Vector s = x_new - res.x;
        const Vector y = g_new - res.grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            // Sherman-Morrison form of the inverse BFGS update.
            const Vector Hy = Hinv * y;
            const double yHy = y.dot(Hy);
            Hinv += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                    (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        res.x = std::move(x_new);
        res.f = f_new;
        res.grad = g_new;
        if (res.f < best_f) {
            best_f = res.f;
            best_x = res.x;
        }
    }

    if (res.f > best_f) {
        res.x = best_x;
        res.f = best_f;
        fg(res.x, &res.grad);
    }
    return res;
}

}  // namespace phsyn
