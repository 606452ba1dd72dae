#include <doctest.h>

#include <cmath>

#include "gridvad/rng.hpp"
#include "gridvad/sampler.hpp"
#include "helpers.hpp"

using namespace gridvad;

namespace {

Clip clip(int s, int l) { return {"v", {s, s + l - 1}}; }

std::vector<int> widths(const BinPartition& p) {
  std::vector<int> w;
  for (const auto& b : p.bins) w.push_back(b.size());
  return w;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("exact division") {
    const auto p = partition(clip(0, 90), 9);
    REQUIRE(p.bins.size() == 9);
    for (int k = 1; k <= 9; ++k) CHECK(p.bin(k) == FrameRange{10 * (k - 1), 10 * k});
    CHECK(p.grid_side() == 3);
  }

  TEST_CASE("uneven division follows floor(kL/K)") {
    CHECK(widths(partition(clip(0, 10), 9)) == std::vector<int>{1, 1, 1, 1, 1, 1, 1, 1, 2});
    const auto p = partition(clip(100, 10), 9);
    CHECK(p.bins.front().begin == 100);
    CHECK(p.bins.back().end == 110);
  }

  TEST_CASE("clips shorter than the grid are rejected") {
    CHECK_THROWS_AS(partition(clip(0, 5), 9), ClipTooShort);
    CHECK_THROWS_AS(partition(clip(0, 5), 0), InvalidArgument);
  }

  TEST_CASE("bins tile random clips") {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
      const int k = static_cast<int>(rng.uniform_int(1, 30));
      const int l = static_cast<int>(rng.uniform_int(k, 500));
      const int s = static_cast<int>(rng.uniform_int(0, 10000));
      const auto p = partition(clip(s, l), k);
      REQUIRE(static_cast<int>(p.bins.size()) == k);
      int at = s;
      for (const auto& b : p.bins) {
        CHECK(b.begin == at);
        CHECK(b.size() >= 1);
        at = b.end;
      }
      CHECK(at == s + l);
    }
  }

  TEST_CASE("decode cells") {
    const auto p = partition(clip(0, 90), 9);
    const std::vector<int> one{1}, two_five{2, 5}, all{1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(decode_cells(p, one) == TemporalInterval{0, 9});
    CHECK(decode_cells(p, two_five) == TemporalInterval{10, 49});
    CHECK(decode_cells(p, all) == TemporalInterval{0, 89});
    CHECK_THROWS_AS(decode_cells(p, std::vector<int>{}), ParseError);
    CHECK_THROWS_AS(decode_cells(p, std::vector<int>{10}), ParseError);
    CHECK_THROWS_AS(decode_cells(p, std::vector<int>{0}), ParseError);
  }

  TEST_CASE("supersets of cells decode to covering intervals") {
    Rng rng(8);
    const auto p = partition(clip(7, 95), 9);
    for (int i = 0; i < 500; ++i) {
      std::vector<int> a, b;
      for (int c = 1; c <= 9; ++c) {
        const bool in_a = rng.bernoulli(0.3);
        if (in_a) a.push_back(c);
        if (in_a || rng.bernoulli(0.3)) b.push_back(c);
      }
      if (a.empty()) continue;
      CHECK(decode_cells(p, a).within(decode_cells(p, b)));
    }
  }

  TEST_CASE("samples touch every bin once and read K frames") {
    testing::CountingFrames frames(200);
    const auto p = partition(clip(13, 170), 9);
    const auto g = sample_grid(p, 2, 99, frames);
    CHECK(frames.reads == 9);
    REQUIRE(g.frame_indices.size() == 9);
    for (int k = 1; k <= 9; ++k) CHECK(p.bin(k).contains(g.frame_indices[k - 1]));
    CHECK(g.sampling_index == 2);
    CHECK(g.seed == 99);
    CHECK(g.montage.height() == 3 * 4);
    CHECK(g.montage.width() == 3 * 6);
  }

  TEST_CASE("singleton bins give their only frame") {
    testing::CountingFrames frames(9);
    const auto g = sample_grid(partition(clip(0, 9), 9), 1, 5, frames);
    for (int k = 0; k < 9; ++k) CHECK(g.frame_indices[k] == k);
  }

  TEST_CASE("same seed, same sample") {
    testing::CountingFrames frames(300);
    const auto p = partition(clip(0, 300), 9);
    const auto a = sample_grid(p, 1, 1234, frames), b = sample_grid(p, 1, 1234, frames);
    CHECK(a.frame_indices == b.frame_indices);
    CHECK(a.montage == b.montage);
    const auto c = sample_grid(p, 1, 1235, frames);
    CHECK(c.frame_indices != a.frame_indices);
  }

  TEST_CASE("draws are uniform within a bin") {
    const auto p = partition(clip(0, 10), 1);
    std::vector<int> counts(10, 0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      Rng rng(hash_combine(777, static_cast<std::uint64_t>(i)));
      ++counts[draw_frame_indices(p, rng)[0]];
    }
    const double expected = n / 10.0, sigma = std::sqrt(n * 0.1 * 0.9);
    double chi2 = 0;
    for (const int c : counts) {
      CHECK(std::abs(c - expected) <= 3 * sigma);
      chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < 21.666);  // chi-square, 9 degrees of freedom, p = 0.01
  }

  TEST_CASE("montage layout is row-major") {
    std::vector<RgbImage> tiles;
    for (int k = 0; k < 4; ++k) tiles.emplace_back(2, 3, std::array<std::uint8_t, 3>{static_cast<std::uint8_t>(k), 0, 0});
    const auto m = tile_frames(tiles, 2);
    CHECK(m.height() == 4);
    CHECK(m.width() == 6);
    CHECK(m.channels[0](0, 0) == 0);
    CHECK(m.channels[0](0, 3) == 1);
    CHECK(m.channels[0](2, 0) == 2);
    CHECK(m.channels[0](3, 5) == 3);
    tiles[3] = RgbImage(3, 3);
    CHECK_THROWS_AS(tile_frames(tiles, 2), DimensionMismatch);
  }

  TEST_CASE("cell labels are stamped only when enabled") {
    testing::CountingFrames frames(90, 40, 40);
    const auto p = partition(clip(0, 90), 9);
    const auto plain = sample_grid(p, 1, 3, frames, GridOptions{false});
    const auto labelled = sample_grid(p, 1, 3, frames, GridOptions{true});
    CHECK(plain.frame_indices == labelled.frame_indices);
    CHECK_FALSE(plain.montage == labelled.montage);
  }
}
