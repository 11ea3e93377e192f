#include <catch2/catch_amalgamated.hpp>

#include "extra/linalg.hpp"
#include "extra/rng.hpp"
#include "oracles.hpp"

using namespace extra::linalg;

namespace {

SymMatrix random_symmetric(std::size_t n, extra::rng::Xorshift64Star& gen) {
    SymMatrix s(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) s.set(i, j, gen.next_normal());
    return s;
}

double reconstruction_error(const SymMatrix& s, const EigDecomposition& eig) {
    const std::size_t n = s.size();
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                v += eig.eigenvectors(i, k) * eig.eigenvalues[k] * eig.eigenvectors(j, k);
            const double d = v - s(i, j);
            err += d * d;
        }
    }
    return std::sqrt(err);
}

double orthonormality_error(const EigDecomposition& eig) {
    const std::size_t n = eig.eigenvalues.size();
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                v += eig.eigenvectors(k, i) * eig.eigenvectors(k, j);
            const double d = v - (i == j ? 1.0 : 0.0);
            err += d * d;
        }
    }
    return std::sqrt(err);
}

}  // namespace

TEST_CASE("eigh_jacobi handles identity and diagonal input") {
    const auto eig_i = eigh_jacobi(SymMatrix::identity(3));
    for (double v : eig_i.eigenvalues) CHECK(v == Catch::Approx(1.0));

    SymMatrix d(2);
    d.set(0, 0, -2.0);
    d.set(1, 1, 5.0);
    const auto eig_d = eigh_jacobi(d);
    CHECK(eig_d.eigenvalues[0] == Catch::Approx(-2.0));
    CHECK(eig_d.eigenvalues[1] == Catch::Approx(5.0));
}

TEST_CASE("eigh_jacobi matches the hand-computed path Laplacian spectrum") {
    // Characteristic polynomial of [[1,-1,0],[-1,2,-1],[0,-1,1]] factors to
    // eigenvalues 0, 1, 3.
    SymMatrix l(3);
    l.set(0, 0, 1.0);
    l.set(1, 1, 2.0);
    l.set(2, 2, 1.0);
    l.set(1, 0, -1.0);
    l.set(2, 1, -1.0);
    const auto eig = eigh_jacobi(l);
    CHECK(eig.eigenvalues[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(eig.eigenvalues[1] == Catch::Approx(1.0).margin(1e-12));
    CHECK(eig.eigenvalues[2] == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("eigh_jacobi reconstruction and orthonormality on random matrices") {
    extra::rng::Xorshift64Star gen(2024);
    for (std::size_t n : {1, 2, 5, 17, 50}) {
        const SymMatrix s = random_symmetric(n, gen);
        const auto eig = eigh_jacobi(s);
        for (std::size_t k = 1; k < n; ++k)
            CHECK(eig.eigenvalues[k - 1] <= eig.eigenvalues[k]);
        CHECK(reconstruction_error(s, eig) <= 1e-10 * std::max(1.0, s.frobenius_norm()));
        CHECK(orthonormality_error(eig) <= 1e-10 * static_cast<double>(n));
    }
}

TEST_CASE("eigh_jacobi converges on the zero matrix") {
    const auto eig = eigh_jacobi(SymMatrix(4));
    for (double v : eig.eigenvalues) CHECK(v == 0.0);
}

TEST_CASE("psd_sqrt fixed cases") {
    const SymMatrix id = SymMatrix::identity(3);
    const SymMatrix root_i = psd_sqrt(id);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(root_i(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-14));

    const SymMatrix zero(2);
    const SymMatrix root_zero = psd_sqrt(zero);
    CHECK(root_zero.frobenius_norm() == 0.0);

    SymMatrix d(2);
    d.set(0, 0, 4.0);
    d.set(1, 1, 9.0);
    const SymMatrix root_d = psd_sqrt(d);
    CHECK(root_d(0, 0) == Catch::Approx(2.0));
    CHECK(root_d(1, 1) == Catch::Approx(3.0));
    CHECK(root_d(0, 1) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("psd_sqrt squares back to the input on random PSD matrices") {
    extra::rng::Xorshift64Star gen(7);
    for (std::size_t n : {2, 6, 12}) {
        // Build PSD input as Q diag(l) Q^T with l >= 0 via eigenvectors of a
        // random symmetric matrix.
        const auto basis = eigh_jacobi(random_symmetric(n, gen));
        std::vector<double> lambda(n);
        for (double& v : lambda) v = std::abs(gen.next_normal());
        SymMatrix s(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    acc += basis.eigenvectors(i, k) * lambda[k] * basis.eigenvectors(j, k);
                s.set(i, j, acc);
            }
        const SymMatrix u = psd_sqrt(s);
        const DenseMatrix uu = mul(u, u.to_dense());
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double d = uu(i, j) - s(i, j);
                err += d * d;
            }
        CHECK(std::sqrt(err) <= 1e-8 * std::max(1.0, s.frobenius_norm()));
    }
}

TEST_CASE("psd_sqrt rejects indefinite input and clamps tiny negatives") {
    SymMatrix neg(2);
    neg.set(0, 0, -1.0);
    neg.set(1, 1, 1.0);
    CHECK_THROWS_AS(psd_sqrt(neg), extra::NotPsdError);

    SymMatrix tiny(2);
    tiny.set(0, 0, -1e-12);
    tiny.set(1, 1, 1.0);
    const SymMatrix u = psd_sqrt(tiny);
    CHECK(u(0, 0) == 0.0);
}

TEST_CASE("g_norm_sq fixed cases and identity-metric property") {
    DenseMatrix a(2, 1);
    a(0, 0) = 1.0;
    a(1, 0) = 1.0;
    SymMatrix g(2);
    g.set(0, 0, 2.0);
    g.set(1, 1, 3.0);
    CHECK(g_norm_sq(a, g) == Catch::Approx(5.0));  // trace evaluates to 2 + 3

    DenseMatrix zero(3, 2);
    CHECK(g_norm_sq(zero, SymMatrix::identity(3)) == 0.0);

    extra::rng::Xorshift64Star gen(11);
    DenseMatrix r(5, 3);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) r(i, j) = gen.next_normal();
    const double fro = r.frobenius_norm_sq();
    CHECK(g_norm_sq(r, SymMatrix::identity(5)) == Catch::Approx(fro).epsilon(1e-12));
}

TEST_CASE("solve_spd fixed cases") {
    DenseMatrix b(2, 1);
    b(0, 0) = 3.0;
    b(1, 0) = 3.0;
    SymMatrix s(2);
    s.set(0, 0, 2.0);
    s.set(1, 1, 2.0);
    s.set(1, 0, 1.0);
    const DenseMatrix x = solve_spd(s, b);  // hand elimination gives (1, 1)
    CHECK(x(0, 0) == Catch::Approx(1.0));
    CHECK(x(1, 0) == Catch::Approx(1.0));

    const DenseMatrix same = solve_spd(SymMatrix::identity(2), b);
    CHECK(same(0, 0) == 3.0);
    CHECK(same(1, 0) == 3.0);

    SymMatrix d(2);
    d.set(0, 0, 2.0);
    d.set(1, 1, 4.0);
    DenseMatrix rhs(2, 1);
    rhs(0, 0) = 2.0;
    rhs(1, 0) = 8.0;
    const DenseMatrix xd = solve_spd(d, rhs);
    CHECK(xd(0, 0) == Catch::Approx(1.0));
    CHECK(xd(1, 0) == Catch::Approx(2.0));
}

TEST_CASE("solve_spd agrees with an LU oracle and meets the residual bound") {
    extra::rng::Xorshift64Star gen(13);
    for (std::size_t n : {3, 8}) {
        // SPD via A^T A + I.
        DenseMatrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) = gen.next_normal();
        SymMatrix s = gram(a);
        for (std::size_t i = 0; i < n; ++i) s.set(i, i, s(i, i) + 1.0);

        DenseMatrix b(n, 1);
        std::vector<double> b_vec(n);
        for (std::size_t i = 0; i < n; ++i) b(i, 0) = b_vec[i] = gen.next_normal();

        const DenseMatrix x = solve_spd(s, b);
        const std::vector<double> x_lu = oracles::lu_solve(s.to_dense(), b_vec);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(x(i, 0) == Catch::Approx(x_lu[i]).margin(1e-9));

        const DenseMatrix residual = mul(s, x) - b;
        CHECK(residual.frobenius_norm() <= 1e-10 * b.frobenius_norm());
    }
}

TEST_CASE("solve_spd rejects indefinite systems") {
    SymMatrix s(2);
    s.set(0, 0, 1.0);
    s.set(1, 1, -1.0);
    DenseMatrix b(2, 1);
    b(0, 0) = 1.0;
    CHECK_THROWS_AS(solve_spd(s, b), extra::NotPsdError);
}

TEST_CASE("matrix types enforce their invariants") {
    CHECK_THROWS_AS(DenseMatrix(0, 3), extra::DimensionError);
    CHECK_THROWS_AS(DenseMatrix(2, 2, {1.0}), extra::DimensionError);

    DenseMatrix skew(2, 2);
    skew(0, 1) = 1.0;
    skew(1, 0) = -1.0;
    CHECK_THROWS_AS(SymMatrix::from_dense(skew), extra::DimensionError);

    SymMatrix s(3);
    s.set(0, 2, 4.5);
    CHECK(s(2, 0) == 4.5);  // one stored triangle, symmetric by construction

    DenseMatrix a(2, 2), b(3, 3);
    CHECK_THROWS_AS(a += b, extra::DimensionError);
    CHECK_THROWS_AS(mul(SymMatrix::identity(3), a), extra::DimensionError);
}
