#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ada/metrics.hpp"

using namespace ada;

namespace {

Tensor random_image(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    Tensor img({n, n});
    std::uniform_real_distribution<double> d(lo, hi);
    for (double& v : img.data) v = d(rng);
    return img;
}

}  // namespace

TEST_CASE("mse basics") {
    std::mt19937_64 rng(1);
    const Tensor a = random_image(8, rng);
    CHECK(mse({a, a, 1.0}) == 0.0);

    Tensor zeros({8, 8});
    Tensor ones({8, 8}, 1.0);
    CHECK(mse({zeros, ones, 1.0}) == 1.0);
}

TEST_CASE("mse matches a naive double loop and is symmetric") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const Tensor a = random_image(9, rng);
        const Tensor b = random_image(9, rng);
        double naive = 0.0;
        for (std::size_t i = 0; i < 9; ++i)
            for (std::size_t j = 0; j < 9; ++j)
                naive += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
        naive /= 81.0;
        CHECK(mse({a, b, 1.0}) == doctest::Approx(naive).epsilon(1e-12));
        CHECK(mse({a, b, 1.0}) == mse({b, a, 1.0}));
    }
}

TEST_CASE("mse rejects mismatched shapes") {
    CHECK_THROWS_AS(mse({Tensor({8, 8}), Tensor({9, 9}), 1.0}), std::invalid_argument);
}

TEST_CASE("psnr reference points") {
    Tensor zeros({8, 8});
    Tensor ones({8, 8}, 255.0);
    // mse = range^2 -> 0 dB
    CHECK(psnr({zeros, ones, 255.0}) == doctest::Approx(0.0).epsilon(1e-12));
    // mse = 1, range 255 -> 48.13 dB
    Tensor off({8, 8}, 1.0);
    CHECK(psnr({zeros, off, 255.0}) == doctest::Approx(48.13).epsilon(0.0002));
    // identical -> +inf sentinel
    CHECK(std::isinf(psnr({zeros, zeros, 255.0})));
}

TEST_CASE("psnr is strictly decreasing in mse") {
    Tensor zeros({8, 8});
    double prev = std::numeric_limits<double>::infinity();
    for (double level : {0.01, 0.1, 0.5, 1.0, 2.0}) {
        Tensor c({8, 8}, level);
        const double p = psnr({zeros, c, 1.0});
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("ssim of an image with itself is 1") {
    std::mt19937_64 rng(3);
    const Tensor a = random_image(12, rng);
    CHECK(ssim({a, a, 1.0}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ssim against the range-symmetric negative is non-positive") {
    std::mt19937_64 rng(4);
    const Tensor a = random_image(12, rng);
    Tensor neg = a;
    for (double& v : neg.data) v = 1.0 - v;
    CHECK(ssim({a, neg, 1.0}) <= 0.0);
}

TEST_CASE("ssim of two constant images reduces to the luminance term") {
    Tensor a({8, 8}, 0.25);
    Tensor b({8, 8}, 0.75);
    const double c1 = 0.01 * 0.01;
    const double expected = (2 * 0.25 * 0.75 + c1) / (0.25 * 0.25 + 0.75 * 0.75 + c1);
    CHECK(ssim({a, b, 1.0}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ssim rejects images smaller than the window") {
    CHECK_THROWS_AS(ssim({Tensor({4, 4}), Tensor({4, 4}), 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(ssim({Tensor({16}), Tensor({16}), 1.0}), std::invalid_argument);
}

TEST_CASE("ssim stays within [-1, 1] over random pairs") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 1000; ++t) {
        const Tensor a = random_image(8, rng);
        const Tensor b = random_image(8, rng);
        const double s = ssim({a, b, 1.0});
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
    }
}
