#include <catch2/catch_amalgamated.hpp>

#include "emgram/linalg.hpp"
#include "emgram/testing.hpp"

using namespace emgram;

namespace {

Matrix random_matrix(Index rows, Index cols, unsigned seed) {
    std::srand(seed);
    return Matrix::Random(rows, cols);
}

}  // namespace

TEST_CASE("svd basics") {
    SECTION("identity has unit singular values") {
        SvdResult dec = svd(Matrix::Identity(5, 5));
        CHECK((dec.S.array() - 1.0).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("rank-1 outer product") {
        Vector b(3), c(4);
        b << 1, 2, 2;
        c << 0, 3, 0, 4;
        SvdResult dec = svd(b * c.transpose());
        CHECK(dec.S(0) == Catch::Approx(b.norm() * c.norm()));
        CHECK(dec.S.tail(2).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("B*C style rank-1 product has spectrum (2,0,0,0)") {
        Vector b(4), c(4);
        b << 0, 1, 0, 1;
        c << 0, 0, 1, 1;
        SvdResult dec = svd(b * c.transpose());
        CHECK(dec.S(0) == Catch::Approx(2.0));
        CHECK(dec.S.tail(3).cwiseAbs().maxCoeff() < 1e-13);
    }
    SECTION("reconstruction and orthogonality on random matrices") {
        for (Index n : {16, 64, 256}) {
            Matrix m = random_matrix(n, n, static_cast<unsigned>(n));
            SvdResult dec = svd(m);
            const double scale = dec.S(0);
            CHECK((Matrix(dec.U * dec.S.asDiagonal() * dec.V.transpose()) - m).norm() <
                  1e-12 * scale * std::sqrt(static_cast<double>(n)));
            CHECK((dec.U.transpose() * dec.U - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <
                  1e-12);
            CHECK((dec.V.transpose() * dec.V - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <
                  1e-12);
            for (Index i = 1; i < n; ++i) CHECK(dec.S(i) <= dec.S(i - 1));
        }
    }
    SECTION("non-finite input rejected") {
        Matrix m = Matrix::Zero(2, 2);
        m(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(svd(m), numerical_error);
    }
}

TEST_CASE("sqrt_psd") {
    SECTION("diagonal") {
        Matrix w = Vector{{4.0, 1.0}}.asDiagonal();
        Matrix r = sqrt_psd(w);
        CHECK(r(0, 0) == Catch::Approx(2.0));
        CHECK(r(1, 1) == Catch::Approx(1.0));
        CHECK(std::abs(r(0, 1)) < 1e-14);
    }
    SECTION("zero matrix") { CHECK(sqrt_psd(Matrix::Zero(3, 3)).isZero()); }
    SECTION("square of the root reproduces the input on random PSD matrices") {
        for (unsigned seed = 1; seed <= 100; ++seed) {
            const Index n = 2 + seed % 7;
            Matrix g = random_matrix(n, n, seed);
            Matrix w = g * g.transpose();
            Matrix r = sqrt_psd(w);
            CHECK((Matrix(r * r) - w).norm() < 1e-9 * std::max(1.0, w.norm()));
        }
    }
    SECTION("asymmetric and indefinite inputs rejected") {
        Matrix m(2, 2);
        m << 1.0, 0.5, 0.0, 1.0;
        CHECK_THROWS_AS(sqrt_psd(m), numerical_error);
        Matrix neg = -Matrix::Identity(2, 2);
        CHECK_THROWS_AS(sqrt_psd(neg), numerical_error);
    }
}

TEST_CASE("approx_inverse") {
    SECTION("diagonal matrices invert exactly") {
        for (unsigned seed = 1; seed <= 20; ++seed) {
            std::srand(seed);
            Vector d = Vector::Random(5).array() + 2.0;
            Matrix a = d.asDiagonal();
            CHECK((approx_inverse(a) - Matrix(d.cwiseInverse().asDiagonal()))
                      .cwiseAbs()
                      .maxCoeff() < 1e-15);
        }
    }
    SECTION("hand-checked 2x2") {
        Matrix a(2, 2);
        a << 2.0, 1.0, 1.0, 2.0;
        Matrix inv = approx_inverse(a);
        CHECK(inv(0, 0) == Catch::Approx(0.5));
        CHECK(inv(0, 1) == Catch::Approx(-0.25));
        CHECK(inv(1, 0) == Catch::Approx(-0.25));
        CHECK(inv(1, 1) == Catch::Approx(0.5));
    }
    SECTION("Neumann accuracy A = I + eps E") {
        const double eps = 1e-3;
        Matrix e(3, 3);
        e << 0, 1, -1, 1, 0, 2, -2, 1, 0;
        Matrix a = Matrix::Identity(3, 3) + eps * e;
        Matrix residual = approx_inverse(a) * a - Matrix::Identity(3, 3);
        CHECK(residual.cwiseAbs().maxCoeff() < 10.0 * eps * eps);
    }
    SECTION("zero diagonal entry names the index") {
        Matrix a = Matrix::Identity(3, 3);
        a(1, 1) = 0.0;
        try {
            approx_inverse(a);
            FAIL("expected numerical_error");
        } catch (const numerical_error& e) {
            CHECK(std::string(e.what()).find("1") != std::string::npos);
        }
    }
}

TEST_CASE("lyapunov oracle") {
    SECTION("A = -0.5 I, Q = B B^T solves to B B^T") {
        Matrix a = -0.5 * Matrix::Identity(4, 4);
        Vector b(4);
        b << 0, 1, 0, 1;
        Matrix q = b * b.transpose();
        CHECK((testing::lyapunov_oracle(a, q) - q).cwiseAbs().maxCoeff() < 1e-13);
    }
    SECTION("A = -I, Q = 2I solves to I") {
        CHECK((testing::lyapunov_oracle(-Matrix::Identity(3, 3), 2.0 * Matrix::Identity(3, 3)) -
               Matrix::Identity(3, 3))
                  .cwiseAbs()
                  .maxCoeff() < 1e-13);
    }
    SECTION("scalar a = -1, q = 1 gives w = 0.5") {
        CHECK(testing::lyapunov_oracle(-Matrix::Identity(1, 1), Matrix::Identity(1, 1))(0, 0) ==
              Catch::Approx(0.5));
    }
    SECTION("residual check on a random stable system") {
        std::srand(7);
        Matrix g = Matrix::Random(6, 6);
        Matrix a = -Matrix::Identity(6, 6) * 3.0 + 0.5 * g;
        Matrix q = Matrix::Random(6, 6);
        q = Matrix(q * q.transpose());
        Matrix w = testing::lyapunov_oracle(a, q);
        CHECK((a * w + w * a.transpose() + q).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("sylvester oracle") {
    SECTION("four-state rank-1 case solves to B*C") {
        Matrix a = -0.5 * Matrix::Identity(4, 4);
        Matrix b(4, 1), c(1, 4);
        b << 0, 1, 0, 1;
        c << 0, 0, 1, 1;
        CHECK((testing::sylvester_oracle(a, b, c) - Matrix(b * c)).cwiseAbs().maxCoeff() < 1e-13);
    }
    SECTION("scalar a=-1, b=c=1 gives 0.5") {
        CHECK(testing::sylvester_oracle(-Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                                        Matrix::Identity(1, 1))(0, 0) == Catch::Approx(0.5));
    }
    SECTION("B = 0 gives W = 0") {
        Matrix a = -Matrix::Identity(3, 3);
        CHECK(testing::sylvester_oracle(a, Matrix::Zero(3, 1), Matrix::Ones(1, 3)).isZero());
    }
}
