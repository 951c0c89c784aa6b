#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "rulenet/kernels.hpp"
#include "test_util.hpp"

using namespace rulenet;
namespace k = rulenet::kernels;

namespace {

// Logical oracles for the layer arithmetic.
bool conj_oracle(const std::vector<int>& w, const std::vector<int>& phi) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] == 1 && phi[i] == 0) return false;
    return true; // empty conjunction is vacuously true
}

bool disj_oracle(const std::vector<int>& w, const std::vector<int>& z) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] == 1 && z[i] == 1) return true;
    return false; // empty disjunction is false
}

} // namespace

TEST_CASE("conjunction arithmetic equals logical AND for all binary cases up to 4 literals") {
    const auto& ops = k::scalar_ops();
    for (std::size_t m = 1; m <= 4; ++m) {
        const std::size_t combos = std::size_t{1} << m;
        for (std::size_t wb = 0; wb < combos; ++wb) {
            for (std::size_t pb = 0; pb < combos; ++pb) {
                std::vector<int> wi(m), pi(m);
                std::vector<double> w(m), phi(m);
                for (std::size_t i = 0; i < m; ++i) {
                    wi[i] = (wb >> i) & 1;
                    pi[i] = (pb >> i) & 1;
                    w[i] = wi[i];
                    phi[i] = pi[i];
                }
                double slack = 0.0, z = 0.0;
                // single conjunction: w column is the m x 1 matrix
                ops.conj_forward(1, m, 1, w.data(), phi.data(), &slack, &z);
                CHECK(z == (conj_oracle(wi, pi) ? 1.0 : 0.0));
            }
        }
    }
}

TEST_CASE("disjunction arithmetic equals logical OR for all binary cases up to 4 nodes") {
    const auto& ops = k::scalar_ops();
    for (std::size_t j = 1; j <= 4; ++j) {
        const std::size_t combos = std::size_t{1} << j;
        for (std::size_t wb = 0; wb < combos; ++wb) {
            for (std::size_t zb = 0; zb < combos; ++zb) {
                std::vector<int> wi(j), zi(j);
                std::vector<double> w(j), z(j);
                for (std::size_t i = 0; i < j; ++i) {
                    wi[i] = (wb >> i) & 1;
                    zi[i] = (zb >> i) & 1;
                    w[i] = wi[i];
                    z[i] = zi[i];
                }
                double yhat = 0.0;
                std::int32_t arg = 0;
                ops.disj_forward(1, j, w.data(), z.data(), &yhat, &arg);
                CHECK(yhat == (disj_oracle(wi, zi) ? 1.0 : 0.0));
            }
        }
    }
}

TEST_CASE("disjunction ties route to the lowest index") {
    const auto& ops = k::scalar_ops();
    const std::vector<double> w = {0.8, 0.4};
    const std::vector<double> z = {0.5, 1.0}; // both products are 0.4
    double yhat = 0.0;
    std::int32_t arg = -1;
    ops.disj_forward(1, 2, w.data(), z.data(), &yhat, &arg);
    CHECK(yhat == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(arg == 0);
}

TEST_CASE("sigmoid kernel matches the libm reference") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-40.0, 40.0);
    std::vector<double> x(4096);
    for (double& v : x) v = dist(rng);
    x[0] = 0.0;
    x[1] = -0.0;
    x[2] = 1e-12;
    x[3] = -1e-12;

    for (const double tau : {1.0, 0.25, 1e-2, 1e-4}) {
        std::vector<double> out(x.size());
        k::scalar_ops().sigmoid_scaled(x.size(), x.data(), 1.0 / tau, out.data());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double want = testutil::ref_sigmoid(x[i] / tau);
            CHECK(out[i] == doctest::Approx(want).epsilon(1e-13));
            CHECK(out[i] >= 0.0);
            CHECK(out[i] <= 1.0);
        }
    }
}

TEST_CASE("sigmoid kernel saturates exactly at extreme scaled inputs") {
    const double x[2] = {3.0, -3.0};
    double out[2];
    k::scalar_ops().sigmoid_scaled(2, x, 1.0 / 1e-6, out);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("scalar and avx2 lanes are bitwise identical") {
    if (!k::avx2_supported()) {
        MESSAGE("avx2 not available; skipping");
        return;
    }
    const auto& s = k::scalar_ops();
    const auto& v = k::avx2_ops();
    std::mt19937_64 rng(11);

    // Odd sizes on purpose: exercise the vector tails.
    for (const auto [rows, n_in, n_out] :
         {std::array<std::size_t, 3>{7, 5, 10}, {100, 5, 10}, {33, 3, 1},
          {1, 17, 25}, {64, 10, 25}}) {
        const auto x = testutil::random_vector(rows * n_in, rng);
        const auto w = testutil::random_vector(n_in * n_out, rng);
        const auto bias = testutil::random_vector(n_out, rng);
        std::vector<double> out_s(rows * n_out), out_v(rows * n_out);
        s.affine_forward(rows, n_in, n_out, x.data(), w.data(), bias.data(),
                         out_s.data());
        v.affine_forward(rows, n_in, n_out, x.data(), w.data(), bias.data(),
                         out_v.data());
        CHECK(std::memcmp(out_s.data(), out_v.data(), out_s.size() * 8) == 0);

        const auto g = testutil::random_vector(rows * n_out, rng);
        std::vector<double> dw_s(n_in * n_out, 0.5), dw_v(n_in * n_out, 0.5);
        std::vector<double> db_s(n_out, -0.25), db_v(n_out, -0.25);
        s.affine_backward(rows, n_in, n_out, x.data(), g.data(), dw_s.data(),
                          db_s.data());
        v.affine_backward(rows, n_in, n_out, x.data(), g.data(), dw_v.data(),
                          db_v.data());
        CHECK(std::memcmp(dw_s.data(), dw_v.data(), dw_s.size() * 8) == 0);
        CHECK(std::memcmp(db_s.data(), db_v.data(), db_s.size() * 8) == 0);
    }

    for (const auto [rows, m, j] :
         {std::array<std::size_t, 3>{9, 11, 25}, {100, 10, 25}, {5, 35, 25},
          {17, 2, 3}}) {
        const auto w = testutil::random_vector(m * j, rng, 0.0, 1.0);
        const auto phi = testutil::random_vector(rows * m, rng, 0.0, 1.0);
        std::vector<double> slack_s(rows * j), z_s(rows * j);
        std::vector<double> slack_v(rows * j), z_v(rows * j);
        s.conj_forward(rows, m, j, w.data(), phi.data(), slack_s.data(), z_s.data());
        v.conj_forward(rows, m, j, w.data(), phi.data(), slack_v.data(), z_v.data());
        CHECK(std::memcmp(slack_s.data(), slack_v.data(), slack_s.size() * 8) == 0);
        CHECK(std::memcmp(z_s.data(), z_v.data(), z_s.size() * 8) == 0);

        const auto gz = testutil::random_vector(rows * j, rng);
        std::vector<double> gs_s(rows * j), gs_v(rows * j);
        s.min1_backward(rows * j, slack_s.data(), gz.data(), gs_s.data());
        v.min1_backward(rows * j, slack_s.data(), gz.data(), gs_v.data());
        CHECK(std::memcmp(gs_s.data(), gs_v.data(), gs_s.size() * 8) == 0);

        std::vector<double> gw_s(m * j, 0.125), gw_v(m * j, 0.125);
        s.conj_backward_weights(rows, m, j, phi.data(), gs_s.data(), gw_s.data());
        v.conj_backward_weights(rows, m, j, phi.data(), gs_s.data(), gw_v.data());
        CHECK(std::memcmp(gw_s.data(), gw_v.data(), gw_s.size() * 8) == 0);

        std::vector<double> wt(j * m);
        k::transpose(m, j, w.data(), wt.data());
        std::vector<double> gphi_s(rows * m), gphi_v(rows * m);
        s.conj_backward_inputs(rows, m, j, wt.data(), gs_s.data(), gphi_s.data());
        v.conj_backward_inputs(rows, m, j, wt.data(), gs_s.data(), gphi_v.data());
        CHECK(std::memcmp(gphi_s.data(), gphi_v.data(), gphi_s.size() * 8) == 0);
    }

    // Transcendental lane: same algorithm both sides, still exact.
    for (const std::size_t n : {1ul, 3ul, 4ul, 255ul, 1024ul}) {
        const auto x = testutil::random_vector(n, rng, -2000.0, 2000.0);
        std::vector<double> out_s(n), out_v(n);
        for (const double inv_tau : {1.0, 4.0, 1e4}) {
            s.sigmoid_scaled(n, x.data(), inv_tau, out_s.data());
            v.sigmoid_scaled(n, x.data(), inv_tau, out_v.data());
            CHECK(std::memcmp(out_s.data(), out_v.data(), n * 8) == 0);

            const auto g = testutil::random_vector(n, rng);
            std::vector<double> gs(n), gv(n);
            s.sigmoid_backward(n, out_s.data(), inv_tau, g.data(), gs.data());
            v.sigmoid_backward(n, out_s.data(), inv_tau, g.data(), gv.data());
            CHECK(std::memcmp(gs.data(), gv.data(), n * 8) == 0);
        }
    }
}

TEST_CASE("isa selection is overridable") {
    const k::Isa saved = k::active_isa();
    k::set_active_isa(k::Isa::Scalar);
    CHECK(std::string(k::active_ops().name) == "scalar");
    if (k::avx2_supported()) {
        k::set_active_isa(k::Isa::Avx2);
        CHECK(std::string(k::active_ops().name) == "avx2");
    }
    k::set_active_isa(saved);
}
