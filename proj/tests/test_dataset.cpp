#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nesp/common.hpp"
#include "nesp/dataset.hpp"

using namespace nesp;

namespace {
std::string temp_path(const char* name) {
    return std::string("/tmp/nesp_test_") + name;
}
} // namespace

TEST_CASE("gaussian chain shape, labels and cluster separation") {
    const std::size_t clusters = 5, per = 40, dim = 8;
    const Matrix x = gen_gaussian_chain(clusters, per, dim, 6.0, 3);
    REQUIRE(x.rows == clusters * per);
    REQUIRE(x.cols == dim);

    const std::vector<int> labels = chain_labels(clusters, per);
    REQUIRE(labels.size() == x.rows);
    CHECK(labels.front() == 0);
    CHECK(labels.back() == int(clusters) - 1);

    // Cluster means should sit about `spacing` apart along consecutive pairs.
    std::vector<std::vector<double>> mean(clusters, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t d = 0; d < dim; ++d) mean[labels[i]][d] += x.at(i, d) / per;
    for (std::size_t c = 0; c + 1 < clusters; ++c) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = mean[c][d] - mean[c + 1][d];
            d2 += diff * diff;
        }
        CHECK(std::sqrt(d2) == doctest::Approx(6.0).epsilon(0.15));
    }

    // Unit within-cluster scatter, up to sampling noise.
    double within = 0.0;
    for (std::size_t i = 0; i < per; ++i)
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = x.at(i, d) - mean[0][d];
            within += diff * diff;
        }
    CHECK(within / (per * dim) == doctest::Approx(1.0).epsilon(0.25));

    const Matrix again = gen_gaussian_chain(clusters, per, dim, 6.0, 3);
    CHECK(again.values == x.values);
}

TEST_CASE("csv round trip preserves values including negatives and exponents") {
    Matrix m;
    m.rows = 3;
    m.cols = 2;
    m.values = {1.5, -2.25, 3.0e-7, 4.0e8, -0.0, 123456.789};
    const std::string path = temp_path("roundtrip.csv");
    save_csv(m, path);
    const Matrix back = load_csv(path);
    REQUIRE(back.rows == 3);
    REQUIRE(back.cols == 2);
    for (std::size_t i = 0; i < m.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(m.values[i]).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("csv loader rejects ragged rows") {
    const std::string path = temp_path("ragged.csv");
    {
        std::ofstream f(path);
        f << "1,2,3\n4,5\n";
    }
    CHECK_THROWS_AS(load_csv(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("idx image loader reads the big-endian header and raw bytes") {
    const std::string path = temp_path("images.idx");
    {
        std::ofstream f(path, std::ios::binary);
        const unsigned char header[16] = {0, 0, 8, 3,  // magic 0x00000803
                                          0, 0, 0, 2,  // 2 images
                                          0, 0, 0, 2,  // 2 rows
                                          0, 0, 0, 3}; // 3 cols
        f.write(reinterpret_cast<const char*>(header), 16);
        unsigned char pixels[12];
        for (int i = 0; i < 12; ++i) pixels[i] = static_cast<unsigned char>(i * 20);
        f.write(reinterpret_cast<const char*>(pixels), 12);
    }
    const Matrix m = load_idx_images(path);
    REQUIRE(m.rows == 2);
    REQUIRE(m.cols == 6);
    CHECK(m.at(0, 0) == doctest::Approx(0.0));
    CHECK(m.at(0, 1) == doctest::Approx(20.0));
    CHECK(m.at(1, 5) == doctest::Approx(220.0));
    std::remove(path.c_str());
}

TEST_CASE("idx label loader") {
    const std::string path = temp_path("labels.idx");
    {
        std::ofstream f(path, std::ios::binary);
        const unsigned char header[8] = {0, 0, 8, 1, 0, 0, 0, 4};
        f.write(reinterpret_cast<const char*>(header), 8);
        const unsigned char labels[4] = {7, 0, 9, 3};
        f.write(reinterpret_cast<const char*>(labels), 4);
    }
    const std::vector<int> l = load_idx_labels(path);
    CHECK(l == std::vector<int>{7, 0, 9, 3});
    std::remove(path.c_str());
}

TEST_CASE("raw f32 round trip") {
    Matrix m;
    m.rows = 2;
    m.cols = 3;
    m.values = {0.5, -1.25, 3.75, 100.0, -0.125, 2.5};
    const std::string path = temp_path("matrix.f32");
    save_raw_f32(m, path);
    const Matrix back = load_raw_f32(path);
    REQUIRE(back.rows == 2);
    REQUIRE(back.cols == 3);
    CHECK(back.values == m.values);
    std::remove(path.c_str());
}

TEST_CASE("vstack concatenates rows and validates widths") {
    Matrix a, b;
    a.rows = 2;
    a.cols = 2;
    a.values = {1, 2, 3, 4};
    b.rows = 1;
    b.cols = 2;
    b.values = {5, 6};
    const Matrix c = vstack(a, b);
    REQUIRE(c.rows == 3);
    CHECK(c.values == std::vector<double>{1, 2, 3, 4, 5, 6});

    Matrix wrong;
    wrong.rows = 1;
    wrong.cols = 3;
    wrong.values = {7, 8, 9};
    CHECK_THROWS_AS(vstack(a, wrong), DataError);
}

TEST_CASE("row subsample is deterministic, unique, and label-alignable") {
    const Matrix x = gen_gaussian_chain(3, 30, 4, 5.0, 1);
    std::vector<std::size_t> picked;
    const Matrix s1 = subsample_rows(x, 20, 9, &picked);
    const Matrix s2 = subsample_rows(x, 20, 9);
    REQUIRE(s1.rows == 20);
    CHECK(s1.values == s2.values);
    REQUIRE(picked.size() == 20);
    std::vector<std::size_t> sorted = picked;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    for (std::size_t r = 0; r < 20; ++r)
        for (std::size_t d = 0; d < 4; ++d) REQUIRE(s1.at(r, d) == x.at(picked[r], d));

    const Matrix all = subsample_rows(x, 1000, 9);
    CHECK(all.rows == x.rows);
}
