#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fognet/errors.hpp"
#include "fognet/gradcheck.hpp"
#include "fognet/rng.hpp"
#include "fognet/tensor.hpp"
#include "fognet/tensor_io.hpp"

using namespace fognet;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, bool requires_grad = false,
                     double scale = 1.0) {
    std::size_t n = 1;
    for (const std::size_t d : shape) n *= d;
    std::vector<double> data(n);
    for (double& v : data) v = scale * rng.normal();
    return Tensor(std::move(shape), std::move(data), requires_grad);
}

} // namespace

TEST_CASE("matmul basics") {
    const Tensor a({2, 2}, {1, 2, 3, 4});

    SUBCASE("identity is a no-op") {
        const Tensor out = matmul(Tensor::identity(2), a);
        for (std::size_t i = 0; i < 4; ++i) CHECK(out.at(i) == a.at(i));
    }
    SUBCASE("hand dot-product oracle") {
        const Tensor out = matmul(a, Tensor({2, 1}, {1, 1}));
        CHECK(out.at(0, 0) == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(out.at(1, 0) == doctest::Approx(7.0).epsilon(1e-14));
    }
    SUBCASE("zeros absorb") {
        const Tensor out = matmul(Tensor::zeros({3, 2}), a);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.at(i) == 0.0);
    }
    SUBCASE("inner dimension mismatch names both shapes") {
        try {
            matmul(a, Tensor::zeros({3, 2}));
            FAIL("expected DimensionError");
        } catch (const DimensionError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("[2,2]") != std::string::npos);
            CHECK(msg.find("[3,2]") != std::string::npos);
        }
    }
}

TEST_CASE("softmax rows") {
    SUBCASE("uniform on constant rows") {
        const Tensor out = softmax_rows(Tensor({1, 3}, {0, 0, 0}));
        for (std::size_t j = 0; j < 3; ++j) CHECK(out.at(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    }
    SUBCASE("scalar exp oracle") {
        const Tensor out = softmax_rows(Tensor({1, 2}, {1, 3}));
        const double e1 = std::exp(1.0), e3 = std::exp(3.0);
        CHECK(out.at(0, 0) == doctest::Approx(e1 / (e1 + e3)).epsilon(1e-14));
        CHECK(out.at(0, 1) == doctest::Approx(e3 / (e1 + e3)).epsilon(1e-14));
        CHECK(out.at(0, 0) == doctest::Approx(0.11920).epsilon(1e-4));
        CHECK(out.at(0, 1) == doctest::Approx(0.88080).epsilon(1e-4));
    }
    SUBCASE("no overflow on large entries") {
        const Tensor out = softmax_rows(Tensor({1, 2}, {1000, 1000}));
        CHECK(out.at(0, 0) == 0.5);
        CHECK(out.at(0, 1) == 0.5);
    }
    SUBCASE("rows sum to one") {
        Rng rng(7);
        const Tensor out = softmax_rows(random_tensor(rng, {5, 9}, false, 10.0));
        for (std::size_t i = 0; i < 5; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 9; ++j) s += out.at(i, j);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("row-sum conservation kills the gradient") {
        Rng rng(8);
        Tensor x = random_tensor(rng, {3, 4}, true);
        sum_all(softmax_rows(x)).backward();
        for (const double g : x.grad()) CHECK(std::abs(g) < 1e-12);
    }
}

TEST_CASE("concat and chunk") {
    Rng rng(11);

    SUBCASE("chunk2 of concat_rows is the identity, bit-exact") {
        const Tensor a = random_tensor(rng, {4, 3});
        const Tensor b = random_tensor(rng, {4, 3});
        const auto [ra, rb] = chunk2(concat_rows(a, b));
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(ra.at(i) == a.at(i));
            CHECK(rb.at(i) == b.at(i));
        }
    }
    SUBCASE("one-element blocks") {
        const Tensor out = concat_rows(Tensor({1, 1}, {2.5}), Tensor({1, 1}, {-1.5}));
        CHECK(out.rows() == 2);
        CHECK(out.at(0, 0) == 2.5);
        CHECK(out.at(1, 0) == -1.5);
    }
    SUBCASE("odd row count rejected") {
        CHECK_THROWS_AS(chunk2(Tensor::zeros({3, 2})), DimensionError);
    }
    SUBCASE("gradient routes to the selected half") {
        Tensor x = random_tensor(rng, {6, 2}, true);
        sum_all(chunk2(x).first).backward();
        const auto& g = x.grad();
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                CHECK(g[i * 2 + j] == (i < 3 ? 1.0 : 0.0));
            }
        }
        // and the same pattern survives the finite-difference oracle
        const auto report = grad_check([&] { return sum_all(chunk2(x).first); }, {{"x", x}});
        CHECK(report.pass);
    }
}

TEST_CASE("cosine similarity matrix") {
    SUBCASE("orthonormal rows give the identity") {
        const Tensor basis({2, 2}, {1, 0, 0, 1});
        const Tensor out = cosine_sim_matrix(basis, basis);
        CHECK(out.at(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(out.at(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(out.at(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(out.at(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("scale invariance") {
        const Tensor out = cosine_sim_matrix(Tensor({1, 2}, {1, 0}), Tensor({1, 2}, {3, 0}));
        CHECK(out.at(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("scalar oracle") {
        const Tensor out = cosine_sim_matrix(Tensor({1, 2}, {1, 1}), Tensor({1, 2}, {1, 0}));
        CHECK(out.at(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
        CHECK(out.at(0, 0) == doctest::Approx(0.70711).epsilon(1e-5));
    }
    SUBCASE("zero-norm row raises") {
        CHECK_THROWS_AS(cosine_sim_matrix(Tensor::zeros({1, 2}), Tensor({1, 2}, {1, 0})),
                        DegenerateInputError);
    }
    SUBCASE("entries stay in [-1, 1]") {
        Rng rng(5);
        const Tensor out = cosine_sim_matrix(random_tensor(rng, {4, 3}, false, 7.0),
                                             random_tensor(rng, {5, 3}, false, 0.3));
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out.at(i) <= 1.0 + 1e-12);
            CHECK(out.at(i) >= -1.0 - 1e-12);
        }
    }
}

TEST_CASE("l2 row normalization") {
    Rng rng(13);
    SUBCASE("unit norms") {
        const Tensor out = l2_normalize_rows(random_tensor(rng, {6, 5}, false, 3.0));
        for (std::size_t i = 0; i < 6; ++i) {
            double sq = 0.0;
            for (std::size_t j = 0; j < 5; ++j) sq += out.at(i, j) * out.at(i, j);
            CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("norm floor raises") {
        CHECK_THROWS_AS(l2_normalize_rows(Tensor({1, 3}, {0, 1e-13, 0})), DegenerateInputError);
    }
}

TEST_CASE("grad_check core") {
    SUBCASE("f(x) = x^2 at x = 3") {
        Tensor x({1, 1}, {3.0}, true);
        const auto report = grad_check([&] { return sum_all(mul(x, x)); }, {{"x", x}}, 1e-5, 1e-9);
        REQUIRE(report.entries.size() == 1);
        CHECK(report.entries[0].max_rel_err < 1e-9);
        x.zero_grad();
        sum_all(mul(x, x)).backward();
        CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));
    }
    SUBCASE("non-finite evaluation raises") {
        Tensor x({1, 1}, {800.0}, true);
        CHECK_THROWS_AS(grad_check([&] { return exp(x); }, {{"x", x}}), EvaluationError);
    }
}

TEST_CASE("every primitive passes the finite-difference oracle") {
    Rng rng(21);
    Tensor a = random_tensor(rng, {3, 4}, true);
    Tensor b = random_tensor(rng, {3, 4}, true);
    Tensor c = random_tensor(rng, {4, 2}, true);
    Tensor row = random_tensor(rng, {1, 4}, true);
    Tensor s = random_tensor(rng, {1, 1}, true);
    Tensor pos({3, 4}, std::vector<double>(12, 0.0), true);
    for (double& v : pos.raw()) v = 0.25 + rng.uniform(); // keeps log well away from zero
    const Tensor w34 = random_tensor(rng, {3, 4});
    const Tensor w43 = random_tensor(rng, {4, 3});
    const Tensor w32 = random_tensor(rng, {3, 2});
    const Tensor w64 = random_tensor(rng, {6, 4});
    const Tensor w33 = random_tensor(rng, {3, 3});
    const Tensor w38 = random_tensor(rng, {3, 8});

    const std::vector<std::pair<std::string, std::function<Tensor()>>> cases = {
        {"matmul", [&] { return sum_all(mul(matmul(a, c), w32)); }},
        {"transpose", [&] { return sum_all(mul(transpose(a), w43)); }},
        {"add", [&] { return sum_all(mul(add(a, b), w34)); }},
        {"sub", [&] { return sum_all(mul(sub(a, b), w34)); }},
        {"mul", [&] { return sum_all(mul(mul(a, b), w34)); }},
        {"scale", [&] { return sum_all(mul(scale(a, -1.7), w34)); }},
        {"add_rowvec", [&] { return sum_all(mul(add_rowvec(a, row), w34)); }},
        {"mul_scalar", [&] { return sum_all(mul(mul_scalar(a, s), w34)); }},
        {"exp", [&] { return sum_all(mul(exp(a), w34)); }},
        {"log", [&] { return sum_all(mul(log(pos), w34)); }},
        {"tanh", [&] { return sum_all(mul(tanh(a), w34)); }},
        {"softmax_rows", [&] { return sum_all(mul(softmax_rows(a), w34)); }},
        {"log_softmax_rows", [&] { return sum_all(mul(log_softmax_rows(a), w34)); }},
        {"concat_rows", [&] { return sum_all(mul(concat_rows(a, b), w64)); }},
        {"chunk2_first", [&] { return sum_all(mul(chunk2(concat_rows(a, b)).first, w34)); }},
        {"chunk2_second", [&] { return sum_all(mul(chunk2(concat_rows(a, b)).second, w34)); }},
        {"concat_cols", [&] { return sum_all(mul(concat_cols(a, a), w38)); }},
        {"slice_cols", [&] { return sum_all(mul(slice_cols(a, 1, 3), w33)); }},
        {"gather_columns", [&] { return sum_all(mul(gather_columns(a, {2, 0, 2}), w33)); }},
        {"mean_rows", [&] { return sum_all(mul(mean_rows(a), row)); }},
        {"sum_all", [&] { return sum_all(a); }},
        {"mean_all", [&] { return mean_all(a); }},
        {"l2_normalize_rows", [&] { return sum_all(mul(l2_normalize_rows(a), w34)); }},
        {"cosine_sim_matrix", [&] { return sum_all(mul(cosine_sim_matrix(a, b), w33)); }},
        {"reshape", [&] { return sum_all(mul(reshape(a, {4, 3}), w43)); }},
    };

    for (const auto& [name, f] : cases) {
        CAPTURE(name);
        const auto report =
            grad_check(f, {{"a", a}, {"b", b}, {"c", c}, {"row", row}, {"s", s}, {"pos", pos}});
        CHECK_MESSAGE(report.pass, name, " max_rel_err=", report.max_rel_err);
        CHECK(report.max_rel_err < 1e-4);
    }
}

TEST_CASE("argmax rows breaks ties low") {
    const Tensor x({2, 3}, {0.1, 0.9, 0.3, 0.4, 0.4, 0.2});
    const auto idx = argmax_rows(x);
    CHECK(idx[0] == 1);
    CHECK(idx[1] == 0);
}

TEST_CASE("operations are deterministic") {
    Rng rng(3);
    const Tensor a = random_tensor(rng, {4, 4}, false, 2.0);
    const Tensor b = random_tensor(rng, {4, 4}, false, 2.0);
    const Tensor first = softmax_rows(matmul(a, b));
    const Tensor second = softmax_rows(matmul(a, b));
    for (std::size_t i = 0; i < first.size(); ++i) CHECK(first.at(i) == second.at(i));
}

TEST_CASE("fvt file round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fognet_fvt_test";
    fs::create_directories(dir);
    Rng rng(17);
    const Tensor t = random_tensor(rng, {3, 5}, false, 2.0);

    SUBCASE("values survive at storage precision") {
        write_fvt(dir / "t.fvt", t);
        const Tensor back = read_fvt(dir / "t.fvt");
        REQUIRE(back.shape() == t.shape());
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(back.at(i) == static_cast<double>(static_cast<float>(t.at(i))));
        }
    }
    SUBCASE("bad magic rejected") {
        std::ofstream os(dir / "bad.fvt", std::ios::binary);
        os << "NOPE12345678";
        os.close();
        CHECK_THROWS_AS(read_fvt(dir / "bad.fvt"), IoError);
    }
    SUBCASE("truncated payload rejected") {
        write_fvt(dir / "trunc.fvt", t);
        fs::resize_file(dir / "trunc.fvt", 16);
        CHECK_THROWS_AS(read_fvt(dir / "trunc.fvt"), IoError);
    }
    SUBCASE("missing file rejected") {
        CHECK_THROWS_AS(read_fvt(dir / "nothere.fvt"), IoError);
    }
    fs::remove_all(dir);
}
