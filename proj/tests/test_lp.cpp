#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cepshed/common.hpp"
#include "cepshed/lp.hpp"

using namespace cepshed;

TEST_CASE("simplex solves textbook cases") {
    SUBCASE("single bound") {
        lp::Problem p;
        int y = p.add_variable("y", 0, lp::kInf);
        p.objective[y] = 1.0;
        p.add_constraint("c", {{y, 1.0}}, lp::Relation::Le, 5.0);
        auto sol = lp::solve(p);
        REQUIRE(sol.status == lp::Status::Optimal);
        CHECK(sol.values[y] == doctest::Approx(5.0));
        CHECK(sol.objective == doctest::Approx(5.0));
    }

    SUBCASE("shedding-shaped: budget forces x down") {
        // max y st y <= 100x, y <= 50, 0.002x <= 0.001, x in [0,1]
        lp::Problem p;
        int y = p.add_variable("y", 0, lp::kInf);
        int x = p.add_variable("x", 0, 1, true);
        p.objective[y] = 1.0;
        p.add_constraint("sel", {{y, 1.0}, {x, -100.0}}, lp::Relation::Le, 0.0);
        p.add_constraint("cap", {{y, 1.0}}, lp::Relation::Le, 50.0);
        p.add_constraint("mass", {{x, 0.002}}, lp::Relation::Le, 0.001);
        auto sol = lp::solve(p);
        REQUIRE(sol.status == lp::Status::Optimal);
        CHECK(sol.values[x] == doctest::Approx(0.5));
        CHECK(sol.values[y] == doctest::Approx(50.0));
    }

    SUBCASE("infeasible pair") {
        lp::Problem p;
        int y = p.add_variable("y", 0, lp::kInf);
        p.objective[y] = 1.0;
        p.add_constraint("lo", {{y, 1.0}}, lp::Relation::Ge, 2.0);
        p.add_constraint("hi", {{y, 1.0}}, lp::Relation::Le, 1.0);
        CHECK(lp::solve(p).status == lp::Status::Infeasible);
    }

    SUBCASE("unbounded") {
        lp::Problem p;
        int y = p.add_variable("y", 0, lp::kInf);
        p.objective[y] = 1.0;
        p.add_constraint("lo", {{y, 1.0}}, lp::Relation::Ge, 2.0);
        CHECK(lp::solve(p).status == lp::Status::Unbounded);
    }

    SUBCASE("equality constraints use artificials") {
        lp::Problem p;
        int a = p.add_variable("a", 0, lp::kInf);
        int b = p.add_variable("b", 0, lp::kInf);
        p.objective[a] = 3.0;
        p.objective[b] = 2.0;
        p.add_constraint("sum", {{a, 1.0}, {b, 1.0}}, lp::Relation::Eq, 4.0);
        p.add_constraint("cap_a", {{a, 1.0}}, lp::Relation::Le, 2.5);
        auto sol = lp::solve(p);
        REQUIRE(sol.status == lp::Status::Optimal);
        CHECK(sol.values[a] == doctest::Approx(2.5));
        CHECK(sol.values[b] == doctest::Approx(1.5));
        CHECK(sol.objective == doctest::Approx(3 * 2.5 + 2 * 1.5));
    }

    SUBCASE("classic 2d maximization") {
        // max 3a+5b st a<=4, 2b<=12, 3a+2b<=18 -> (2,6), 36
        lp::Problem p;
        int a = p.add_variable("a", 0, lp::kInf);
        int b = p.add_variable("b", 0, lp::kInf);
        p.objective[a] = 3;
        p.objective[b] = 5;
        p.add_constraint("c1", {{a, 1.0}}, lp::Relation::Le, 4);
        p.add_constraint("c2", {{b, 2.0}}, lp::Relation::Le, 12);
        p.add_constraint("c3", {{a, 3.0}, {b, 2.0}}, lp::Relation::Le, 18);
        auto sol = lp::solve(p);
        REQUIRE(sol.status == lp::Status::Optimal);
        CHECK(sol.objective == doctest::Approx(36.0));
        CHECK(sol.values[a] == doctest::Approx(2.0));
        CHECK(sol.values[b] == doctest::Approx(6.0));
    }

    SUBCASE("minimization with Ge rows") {
        // min 2a+3b st a+b>=10, a<=6 -> a=6,b=4 -> 24
        lp::Problem p;
        p.maximize = false;
        int a = p.add_variable("a", 0, lp::kInf);
        int b = p.add_variable("b", 0, lp::kInf);
        p.objective[a] = 2;
        p.objective[b] = 3;
        p.add_constraint("need", {{a, 1.0}, {b, 1.0}}, lp::Relation::Ge, 10);
        p.add_constraint("cap", {{a, 1.0}}, lp::Relation::Le, 6);
        auto sol = lp::solve(p);
        REQUIRE(sol.status == lp::Status::Optimal);
        CHECK(sol.objective == doctest::Approx(24.0));
    }
}

TEST_CASE("bounded variables may rest at upper bounds") {
    // max a+b with a,b in [0,1], a+b <= 1.5
    lp::Problem p;
    int a = p.add_variable("a", 0, 1);
    int b = p.add_variable("b", 0, 1, true);
    p.objective[a] = 1;
    p.objective[b] = 1;
    p.add_constraint("c", {{a, 1.0}, {b, 1.0}}, lp::Relation::Le, 1.5);
    auto sol = lp::solve(p);
    REQUIRE(sol.status == lp::Status::Optimal);
    CHECK(sol.objective == doctest::Approx(1.5));
    CHECK(sol.values[a] + sol.values[b] == doctest::Approx(1.5));
    CHECK(sol.values[a] <= 1.0 + 1e-9);
    CHECK(sol.values[b] <= 1.0 + 1e-9);
}

TEST_CASE("solver is deterministic") {
    lp::Problem p;
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    std::vector<int> vars;
    for (int i = 0; i < 6; i++) vars.push_back(p.add_variable("v" + std::to_string(i), 0, 1));
    for (int i = 0; i < 6; i++) p.objective[vars[i]] = u(rng);
    for (int c = 0; c < 4; c++) {
        std::map<int, double> coeffs;
        for (int i = 0; i < 6; i++) coeffs[vars[i]] = u(rng);
        p.add_constraint("c" + std::to_string(c), coeffs, lp::Relation::Le, u(rng));
    }
    auto s1 = lp::solve(p);
    auto s2 = lp::solve(p);
    REQUIRE(s1.status == lp::Status::Optimal);
    CHECK(s1.values == s2.values);
    CHECK(s1.iterations == s2.iterations);
}

TEST_CASE("random LPs agree with dense brute-force vertex enumeration") {
    // Small random programs: max c'x st Ax <= b, x in [0,u]. The oracle
    // enumerates all basis choices among {constraint rows, bound rows}.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    auto brute_force = [&](int n, const std::vector<std::vector<double>>& A,
                           const std::vector<double>& b, const std::vector<double>& c,
                           const std::vector<double>& ub) {
        // Enumerate candidate points: intersections over subsets via grid
        // refinement is unreliable; instead enumerate all subsets of active
        // hyperplanes for n<=3 by solving tiny linear systems.
        std::vector<std::vector<double>> planes;  // row: coeffs + rhs
        for (std::size_t i = 0; i < A.size(); i++) {
            auto r = A[i];
            r.push_back(b[i]);
            planes.push_back(r);
        }
        for (int j = 0; j < n; j++) {
            std::vector<double> lo(n + 1, 0.0), hi(n + 1, 0.0);
            lo[j] = 1.0;
            hi[j] = 1.0;
            hi[n] = ub[j];
            planes.push_back(lo);  // x_j = 0
            planes.push_back(hi);  // x_j = ub_j
        }
        double best = -1e300;
        int m = static_cast<int>(planes.size());
        std::vector<int> idx(n);
        std::function<void(int, int)> rec = [&](int start, int k) {
            if (k == n) {
                // solve the n x n system by Gaussian elimination
                std::vector<std::vector<double>> M(n, std::vector<double>(n + 1));
                for (int r = 0; r < n; r++) M[r] = planes[idx[r]];
                for (int col = 0; col < n; col++) {
                    int piv = -1;
                    for (int r = col; r < n; r++)
                        if (std::fabs(M[r][col]) > 1e-9) {
                            piv = r;
                            break;
                        }
                    if (piv < 0) return;
                    std::swap(M[col], M[piv]);
                    for (int r = 0; r < n; r++) {
                        if (r == col) continue;
                        double f = M[r][col] / M[col][col];
                        for (int cc = col; cc <= n; cc++) M[r][cc] -= f * M[col][cc];
                    }
                }
                std::vector<double> x(n);
                for (int r = 0; r < n; r++) x[r] = M[r][n] / M[r][r];
                // feasibility
                for (int j = 0; j < n; j++)
                    if (x[j] < -1e-7 || x[j] > ub[j] + 1e-7) return;
                for (std::size_t i = 0; i < A.size(); i++) {
                    double lhs = 0;
                    for (int j = 0; j < n; j++) lhs += A[i][j] * x[j];
                    if (lhs > b[i] + 1e-7) return;
                }
                double val = 0;
                for (int j = 0; j < n; j++) val += c[j] * x[j];
                best = std::max(best, val);
                return;
            }
            for (int i = start; i < m; i++) {
                idx[k] = i;
                rec(i + 1, k + 1);
            }
        };
        rec(0, 0);
        return best;
    };

    for (int it = 0; it < 40; it++) {
        int n = 2 + (it % 2);  // 2 or 3 variables
        int m = 2 + (it % 3);  // 2..4 constraints
        std::vector<std::vector<double>> A(m, std::vector<double>(n));
        std::vector<double> b(m), c(n), ub(n);
        for (int j = 0; j < n; j++) {
            c[j] = 0.2 + u01(rng);
            ub[j] = 0.5 + 2 * u01(rng);
        }
        for (int i = 0; i < m; i++) {
            b[i] = 0.5 + 2 * u01(rng);
            for (int j = 0; j < n; j++) A[i][j] = 0.1 + u01(rng);
        }

        lp::Problem p;
        std::vector<int> vars;
        for (int j = 0; j < n; j++) vars.push_back(p.add_variable("x" + std::to_string(j), 0, ub[j]));
        for (int j = 0; j < n; j++) p.objective[vars[j]] = c[j];
        for (int i = 0; i < m; i++) {
            std::map<int, double> coeffs;
            for (int j = 0; j < n; j++) coeffs[vars[j]] = A[i][j];
            p.add_constraint("c" + std::to_string(i), coeffs, lp::Relation::Le, b[i]);
        }
        auto sol = lp::solve(p);
        REQUIRE(sol.status == lp::Status::Optimal);
        double best = brute_force(n, A, b, c, ub);
        CHECK(sol.objective == doctest::Approx(best).epsilon(1e-7));
    }
}

TEST_CASE("lexicographic refinement sheds slack without losing the optimum") {
    // max y st y <= 10 x1, y <= 10 x2, y <= 5: primary optimum leaves x1,x2
    // anywhere >= 0.5; the secondary pass pulls both to exactly 0.5.
    lp::Problem p;
    int y = p.add_variable("y", 0, lp::kInf);
    int x1 = p.add_variable("x1", 0, 1, true);
    int x2 = p.add_variable("x2", 0, 1, true);
    p.objective[y] = 1.0;
    p.add_constraint("s1", {{y, 1.0}, {x1, -10.0}}, lp::Relation::Le, 0.0);
    p.add_constraint("s2", {{y, 1.0}, {x2, -10.0}}, lp::Relation::Le, 0.0);
    p.add_constraint("cap", {{y, 1.0}}, lp::Relation::Le, 5.0);

    auto refined = lp::lexico_min_secondary(p, {{x1, 1.0}, {x2, 1.0}});
    REQUIRE(refined.status == lp::Status::Optimal);
    CHECK(refined.objective == doctest::Approx(5.0));
    CHECK(refined.values[x1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(refined.values[x2] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("lp text dump lists objective, constraints and bounds") {
    lp::Problem p;
    int y = p.add_variable("y", 0, lp::kInf);
    int x = p.add_variable("x", 0, 1);
    p.objective[y] = 2.0;
    p.add_constraint("sel", {{y, 1.0}, {x, -3.5}}, lp::Relation::Le, 0.0);
    std::string text = p.to_lp_format();
    CHECK(text.find("Maximize") != std::string::npos);
    CHECK(text.find("sel:") != std::string::npos);
    CHECK(text.find("x <= 1") != std::string::npos);
}
