#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "divq/nn.hpp"
#include "divq/rng.hpp"
#include "divq/similarity.hpp"

using namespace divq;

namespace {

Tensor random_matrix(std::mt19937_64& gen, std::size_t n, std::size_t p, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Tensor x({n, p});
    for (double& v : x.data()) v = dist(gen);
    return x;
}

// Random p x p orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
Tensor random_orthogonal(std::mt19937_64& gen, std::size_t p) {
    Tensor q = random_matrix(gen, p, p);
    for (std::size_t c = 0; c < p; ++c) {
        for (std::size_t prev = 0; prev < c; ++prev) {
            double dot = 0.0;
            for (std::size_t r = 0; r < p; ++r) dot += q.at(r, c) * q.at(r, prev);
            for (std::size_t r = 0; r < p; ++r) q.at(r, c) -= dot * q.at(r, prev);
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < p; ++r) norm += q.at(r, c) * q.at(r, c);
        norm = std::sqrt(norm);
        for (std::size_t r = 0; r < p; ++r) q.at(r, c) /= norm;
    }
    return q;
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
    Tensor c({a.rows(), b.cols()});
    detail::matmul_acc(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(),
                       b.cols());
    return c;
}

}  // namespace

TEST_CASE("linear gram") {
    SECTION("identity") {
        const Tensor x({2, 2}, {1, 0, 0, 1});
        const Tensor k = linear_gram(x);
        CHECK(k.data() == std::vector<double>{1, 0, 0, 1});
    }
    SECTION("hand product") {
        const Tensor x({2, 1}, {1, 2});
        const Tensor k = linear_gram(x);
        CHECK(k.data() == std::vector<double>{1, 2, 2, 4});
    }
    SECTION("symmetry on random input") {
        std::mt19937_64 gen(5);
        const Tensor x = random_matrix(gen, 12, 5);
        const Tensor k = linear_gram(x);
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t j = 0; j < 12; ++j)
                REQUIRE(k.at(i, j) == Catch::Approx(k.at(j, i)).margin(1e-12));
    }
}

TEST_CASE("hsic") {
    SECTION("2x2 hand computation equals 4") {
        const Tensor x({2, 1}, {1, -1});
        const Tensor k = linear_gram(x);
        CHECK(hsic(k, k) == Catch::Approx(4.0).margin(1e-12));
    }
    SECTION("constant features are annihilated") {
        std::mt19937_64 gen(6);
        const Tensor x = random_matrix(gen, 10, 4);
        Tensor c({10, 3});
        for (std::size_t r = 0; r < 10; ++r)
            for (std::size_t j = 0; j < 3; ++j) c.at(r, j) = 7.5;
        CHECK(std::fabs(hsic(linear_gram(x), linear_gram(c))) < 1e-12);
    }
    SECTION("symmetry in the arguments") {
        std::mt19937_64 gen(7);
        for (int t = 0; t < 20; ++t) {
            const Tensor k = linear_gram(random_matrix(gen, 8, 3));
            const Tensor l = linear_gram(random_matrix(gen, 8, 5));
            REQUIRE(hsic(k, l) == Catch::Approx(hsic(l, k)).margin(1e-12));
        }
    }
    SECTION("self-hsic nonnegative for PSD input") {
        std::mt19937_64 gen(8);
        for (int t = 0; t < 20; ++t) {
            const Tensor k = linear_gram(random_matrix(gen, 9, 4));
            REQUIRE(hsic(k, k) >= -1e-12);
        }
    }
    SECTION("shape errors") {
        const Tensor k({2, 2}, {1, 0, 0, 1});
        const Tensor l({3, 3});
        CHECK_THROWS_AS(hsic(k, l), shape_error);
    }
}

TEST_CASE("cka") {
    std::mt19937_64 gen(9);

    SECTION("self-similarity is exactly 1") {
        const Tensor x = random_matrix(gen, 20, 6);
        CHECK(cka(x, x) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("range [0, 1] and symmetry") {
        for (int t = 0; t < 20; ++t) {
            const Tensor x = random_matrix(gen, 15, 4);
            const Tensor y = random_matrix(gen, 15, 7);
            const double v = cka(x, y);
            REQUIRE(v >= -1e-9);
            REQUIRE(v <= 1.0 + 1e-9);
            REQUIRE(v == Catch::Approx(cka(y, x)).margin(1e-12));
        }
    }
    SECTION("invariant to orthogonal transforms and isotropic scaling") {
        for (int t = 0; t < 10; ++t) {
            const Tensor x = random_matrix(gen, 24, 5);
            const Tensor y = random_matrix(gen, 24, 5);
            const Tensor rot = random_orthogonal(gen, 5);
            Tensor y_t = matmul_plain(y, rot);
            const double c = 0.1 + 3.0 * (t + 1);
            for (double& v : y_t.data()) v *= c;
            REQUIRE(cka(x, y_t) == Catch::Approx(cka(x, y)).margin(1e-9));
            REQUIRE(cka(y, y_t) == Catch::Approx(1.0).margin(1e-9));
        }
    }
    SECTION("not invariant to general invertible linear maps") {
        // search for a counterexample; one is enough
        bool found = false;
        for (int t = 0; t < 50 && !found; ++t) {
            const Tensor x = random_matrix(gen, 30, 4);
            const Tensor y = random_matrix(gen, 30, 4);
            Tensor m = random_matrix(gen, 4, 4);
            m.at(0, 0) += 4.0;  // keep it comfortably invertible
            m.at(1, 1) += 0.05;
            const Tensor y_t = matmul_plain(y, m);
            if (std::fabs(cka(x, y_t) - cka(x, y)) > 1e-3) found = true;
        }
        CHECK(found);
    }
    SECTION("independent gaussian matrices have low similarity") {
        const Tensor x = random_matrix(gen, 200, 4);
        const Tensor y = random_matrix(gen, 200, 4);
        CHECK(cka(x, y) < 0.2);
    }
    SECTION("degenerate input raises undefined similarity") {
        const Tensor x = random_matrix(gen, 10, 3);
        Tensor c({10, 2});
        for (double& v : c.data()) v = 1.0;
        CHECK_THROWS_AS(cka(x, c), undefined_similarity_error);
    }
}

TEST_CASE("activation capture") {
    Mlp net(3, {4, 4}, 2);
    net.init({1, 2, 3});

    SECTION("two hidden layers give five matrices in forward order") {
        Tensor x({6, 3});
        Rng rng(4);
        for (double& v : x.data()) v = rng.uniform(-1, 1);
        const auto acts = capture_activations(net, x);
        REQUIRE(acts.size() == 5);
        CHECK(net.activation_labels() ==
              std::vector<std::string>{"h1_pre", "h1_post", "h2_pre", "h2_post", "out"});
        for (const Tensor& a : acts) CHECK(a.rows() == 6);
        CHECK(acts[0].cols() == 4);
        CHECK(acts[4].cols() == 2);
        // post-ReLU equals clamped pre-ReLU
        for (std::size_t i = 0; i < acts[0].numel(); ++i)
            CHECK(acts[1][i] == std::max(0.0, acts[0][i]));
    }

    SECTION("zero input with zero biases yields all-zero activations") {
        const Tensor x({4, 3});
        const auto acts = capture_activations(net, x);
        for (const Tensor& a : acts)
            for (double v : a.data()) REQUIRE(v == 0.0);
    }
}

TEST_CASE("heatmaps") {
    std::mt19937_64 gen(12);
    Mlp a(3, {8, 8}, 2), b(3, {6, 6}, 2);
    a.init({10, 11, 12});
    b.init({20, 21, 22});
    Tensor probe({32, 3});
    for (double& v : probe.data()) v = std::uniform_real_distribution<double>(0, 1)(gen);

    SECTION("identical networks have a unit diagonal") {
        const SimilarityHeatmap hm = cka_heatmap(a, a, probe);
        for (std::size_t i = 0; i < hm.row_labels.size(); ++i)
            REQUIRE(hm.values.at(i, i) == Catch::Approx(1.0).margin(1e-9));
        CHECK(mean_corresponding_cka(hm) == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("heatmap(A, B) is the transpose of heatmap(B, A)") {
        const SimilarityHeatmap ab = cka_heatmap(a, b, probe);
        const SimilarityHeatmap ba = cka_heatmap(b, a, probe);
        REQUIRE(ab.row_labels == ba.col_labels);
        for (std::size_t i = 0; i < ab.row_labels.size(); ++i)
            for (std::size_t j = 0; j < ab.col_labels.size(); ++j)
                REQUIRE(ab.values.at(i, j) == Catch::Approx(ba.values.at(j, i)).margin(1e-12));
    }
    SECTION("independent fresh networks: output cell recorded, below 1") {
        const SimilarityHeatmap hm = cka_heatmap(a, b, probe);
        const double out_cell = hm.values.at(4, 4);
        INFO("fresh-network output-layer CKA = " << out_cell);
        CHECK(out_cell < 1.0 - 1e-6);
        CHECK(out_cell >= -1e-9);
    }
}
