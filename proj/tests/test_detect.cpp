#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "quartet/detect.hpp"
#include "quartet/error.hpp"
#include "quartet/symgroup.hpp"

using namespace quartet;
using quartet::testing::random_rotation;
using quartet::testing::random_unit;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double kernel_sum(const Vector4& s, const std::vector<Vector4>& entries, double h) {
  double total = 0;
  for (const auto& r : entries) total += std::exp(-0.5 * (s - r).squaredNorm() / (h * h));
  return total;
}

Vector4 embed(const Vector3& n, double d) { return ReflectionPlane(n, d).embedding(); }

// Votes scattered around a plane with Gaussian jitter in the embedding.
void scatter(std::vector<Vector4>& out, const Vector4& center, std::size_t count, double sigma,
             Rng& rng) {
  std::normal_distribution<double> noise(0, sigma);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(center + Vector4(noise(rng), noise(rng), noise(rng), noise(rng)));
  }
}

double angle_between(const ReflectionPlane& a, const ReflectionPlane& b) {
  return std::acos(std::min(1.0, std::abs(a.normal().dot(b.normal()))));
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kPrecondition;
}

// Cloud with the full dihedral symmetry of order 8 about a random axis.
PointCloud four_fold_cloud(Rng& rng) {
  const SymmetryGroup d4 = generate_group(GeneratorSet(
      {ReflectionPlane(Vector3::UnitX(), 0),
       ReflectionPlane(Vector3(std::cos(kPi / 4), std::sin(kPi / 4), 0), 0)}));
  PointCloud seed(quartet::testing::blob_cloud(rng, 64, 2, 0.1));
  auto [base, norm] = normalize_cloud(apply_group(d4, seed));
  const Matrix3 rot = random_rotation(rng);
  for (auto& p : base.points) p = rot * p + Vector3(0.1, -0.2, 0.05);
  return base;
}

}  // namespace

TEST_CASE("vote_pairs examples") {
  Rng rng(1);
  const PointCloud pair({Point3(1, 0, 0), Point3(-1, 0, 0)});
  const ReflectionDb db = vote_pairs(pair, 10, rng);
  REQUIRE(db.size() == 1);
  CHECK(db.entries[0].isApprox(Vector4(1, 0, 0, 0)));

  const PointCloud same({Point3(0.3, 0.2, 0.1), Point3(0.3, 0.2, 0.1)});
  CHECK(vote_pairs(same, 10, rng).empty());

  CHECK(code_of([&] { vote_pairs(PointCloud({Point3(0, 0, 0)}), 10, rng); }) ==
        ErrorCode::kPrecondition);
  CHECK(code_of([&] { vote_pairs(pair, 0, rng); }) == ErrorCode::kPrecondition);

  // a sampled budget never exceeds the request
  const PointCloud big(quartet::testing::blob_cloud(rng, 200, 3));
  CHECK(vote_pairs(big, 500, rng).size() <= 500);
}

TEST_CASE("symmetric clouds vote for their mirror") {
  // With every pair voting, the N mirror pairs of a 2N-point cloud give a
  // share of exactly N / C(2N, 2) = 1 / (2N - 1) at the true plane; other
  // pairs of a generic cloud land elsewhere.
  Rng rng(2);
  const ReflectionPlane mirror(random_unit(rng), 0.1);
  for (std::size_t half : {2u, 3u, 10u}) {
    PointCloud cloud;
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Point3> seeds;
    for (std::size_t i = 0; i < half; ++i) seeds.emplace_back(u(rng), u(rng), u(rng));
    for (const auto& p : seeds) cloud.points.push_back(p);
    for (const auto& p : seeds) cloud.points.push_back(reflect_point(mirror, p));
    const ReflectionDb db = vote_pairs(cloud, 10000, rng);
    const std::size_t pairs = cloud.size() * (cloud.size() - 1) / 2;
    CHECK(db.size() == pairs);
    const auto near = std::count_if(db.entries.begin(), db.entries.end(), [&](const Vector4& e) {
      return (e - mirror.embedding()).norm() < 0.05;
    });
    const double share = static_cast<double>(near) / static_cast<double>(db.size());
    CHECK(share >= 1.0 / static_cast<double>(2 * half - 1) - 1e-12);
    if (half <= 3) CHECK(share >= 0.2);
  }
}

TEST_CASE("reflection_distance") {
  const ReflectionPlane x(Vector3::UnitX(), 0), y(Vector3::UnitY(), 0);
  CHECK(reflection_distance(x, x) == 0.0);
  CHECK(reflection_distance(x, y) == doctest::Approx(std::sqrt(2.0)));
  // sign flips give the same canonical plane
  CHECK(reflection_distance(ReflectionPlane(-Vector3::UnitX(), -0.3), ReflectionPlane(Vector3::UnitX(), 0.3)) ==
        0.0);

  Rng rng(3);
  std::uniform_real_distribution<double> off(-1, 1);
  for (int i = 0; i < 500; ++i) {
    const ReflectionPlane a(random_unit(rng), off(rng));
    const ReflectionPlane b(random_unit(rng), off(rng));
    const ReflectionPlane c(random_unit(rng), off(rng));
    CHECK(reflection_distance(a, b) == doctest::Approx(reflection_distance(b, a)));
    CHECK(reflection_distance(a, c) <= reflection_distance(a, b) + reflection_distance(b, c) + 1e-12);
    CHECK(reflection_distance(a, b) > 0);
  }

  // planes whose normals straddle the yz-plane canonicalize to opposite
  // signs but stay close
  const ReflectionPlane left(Vector3(-1e-3, 1, 0.3), -0.3), right(Vector3(1e-3, 1, 0.3), -0.3);
  CHECK(left.normal().x() > 0);
  CHECK(right.normal().x() > 0);
  CHECK(reflection_distance(left, right) < 0.01);
}

TEST_CASE("density examples") {
  const DensityParams full{0.15, kInf};
  const Vector4 r = embed(Vector3(1, 2, 3), 0.4);
  const ReflectionDb one{{r}};
  CHECK(density(r, one, full) == doctest::Approx(1.0));
  CHECK(density(r + Vector4(0, 0, 0, 10), one, full) < 1e-12);

  Rng rng(4);
  std::vector<Vector4> three;
  scatter(three, r, 3, 0.1, rng);
  const Vector4 s = r + Vector4(0.05, 0, -0.02, 0.03);
  CHECK(density(s, ReflectionDb{three}, full) == doctest::Approx(kernel_sum(s, three, 0.15)).epsilon(1e-14));

  // a finite radius drops the far entries
  const ReflectionDb mixed{{r, r + Vector4(0, 0, 0, 0.5)}};
  CHECK(density(r, mixed, DensityParams{0.15, 0.3}) == doctest::Approx(1.0));
  CHECK(code_of([&] { density(r, one, DensityParams{0.0, kInf}); }) == ErrorCode::kPrecondition);
}

TEST_CASE("mean_shift examples") {
  const DensityParams full{0.15, kInf};
  const Vector4 r = embed(Vector3(0, 0, 1), 0.2);
  const ReflectionDb one{{r}};
  CHECK((mean_shift(r + Vector4(0.1, -0.05, 0, 0.02), one, full) - r).norm() < 1e-12);
  CHECK((mean_shift(r, one, full) - r).norm() < 1e-15);

  // a start with no neighbours inside the radius stays put
  const Vector4 far = r + Vector4(0, 0, 0, 3);
  CHECK(mean_shift(far, one, DensityParams{0.15, 0.5}) == far);
  CHECK(code_of([&] { mean_shift(r, ReflectionDb{}, full); }) == ErrorCode::kPrecondition);
}

TEST_CASE("mean_shift reaches the densest point of its cluster") {
  Rng rng(5);
  const Vector4 a = embed(Vector3(1, 0.2, 0), 0.1);
  const Vector4 b = embed(Vector3(0, 1, 0.3), -0.4);
  std::vector<Vector4> entries;
  scatter(entries, a, 40, 0.04, rng);
  scatter(entries, b, 40, 0.04, rng);
  const ReflectionDb db{entries};
  const double h = 0.05;
  const DensityParams full{h, kInf};
  const Vector4 found = mean_shift(entries[0], db, full, 1000, 1e-12);

  // brute force: densest point of a grid around cluster A, refined twice
  Vector4 best = a;
  double step = 0.02;
  for (int level = 0; level < 3; ++level) {
    const Vector4 center = best;
    double best_density = -1;
    for (int i = -8; i <= 8; ++i)
      for (int j = -8; j <= 8; ++j)
        for (int k = -8; k <= 8; ++k)
          for (int l = -8; l <= 8; ++l) {
            const Vector4 s = center + step * Vector4(i, j, k, l);
            const double p = kernel_sum(s, entries, h);
            if (p > best_density) {
              best_density = p;
              best = s;
            }
          }
    step /= 8;
  }
  CHECK((found - best).norm() < 2e-3);
  CHECK((found - a).norm() < (found - b).norm());
  CHECK(density(found, db, full) >= kernel_sum(best, entries, h) - 1e-9);
}

TEST_CASE("mean_shift never lowers the density") {
  Rng rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector4> entries;
    for (int i = 0; i < 60; ++i) entries.push_back(embed(random_unit(rng), u(rng)));
    const ReflectionDb db{entries};
    const DensityParams full{0.3, kInf};
    Vector4 s = embed(random_unit(rng), u(rng));
    double last = density(s, db, full);
    for (int it = 0; it < 30; ++it) {
      s = mean_shift(s, db, full, 1, 0.0);
      const double now = density(s, db, full);
      CHECK(now >= last - 1e-12);
      last = now;
    }
  }
}

TEST_CASE("cluster_modes examples") {
  const Vector4 r = embed(Vector3(0.2, 1, 0), 0.3);
  const ReflectionDb same{std::vector<Vector4>(25, r)};
  const auto one = cluster_modes(same, DensityParams{0.15, kInf});
  REQUIRE(one.size() == 1);
  CHECK(one[0].mass == 1.0);
  CHECK((one[0].plane.embedding() - r).norm() < 1e-12);

  Rng rng(7);
  const ReflectionPlane p1(Vector3(1, 0, 0.1), 0.05), p2(Vector3(0.1, 1, 0), -0.2);
  std::vector<Vector4> split;
  scatter(split, p1.embedding(), 600, 0.01, rng);
  scatter(split, p2.embedding(), 400, 0.01, rng);
  std::shuffle(split.begin(), split.end(), rng);
  for (const auto& options : {ClusterOptions{}, DetectConfig{}.cluster}) {
    const auto modes = cluster_modes(ReflectionDb{split}, DensityParams{0.05, kInf}, options);
    REQUIRE(modes.size() == 2);
    CHECK(modes[0].mass == doctest::Approx(0.6).epsilon(0.05 / 0.6));
    CHECK(modes[1].mass == doctest::Approx(0.4).epsilon(0.05 / 0.4));
    CHECK(reflection_distance(modes[0].plane, p1) < 0.01);
    CHECK(reflection_distance(modes[1].plane, p2) < 0.01);
    CHECK(modes[0].plane.normal().norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("cluster_modes on noise") {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vector4> entries;
  for (int i = 0; i < 300; ++i) entries.push_back(embed(random_unit(rng), u(rng)));
  const auto modes = cluster_modes(ReflectionDb{entries}, DensityParams{0.02, kInf});
  CHECK(modes.size() > 50);
  double total = 0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    total += modes[i].mass;
    if (i > 0) CHECK(modes[i].mass <= modes[i - 1].mass);
  }
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("refine_plane pulls a rough mirror onto the true one") {
  Rng rng(9);
  const auto planted = quartet::testing::planted_mirror(rng);
  const Vector3 tilt = (planted.mirror.normal() + 0.08 * random_unit(rng)).normalized();
  const ReflectionPlane rough(tilt, planted.mirror.offset() + 0.02);
  const ReflectionPlane refined = refine_plane(planted.cloud, rough);
  CHECK(angle_between(refined, planted.mirror) < angle_between(rough, planted.mirror));
  CHECK(angle_between(refined, planted.mirror) * 180 / kPi < 1.0);
}

TEST_CASE("planted mirrors are recovered") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng rng = make_rng(777, s);
    const auto planted = quartet::testing::planted_mirror(rng);
    const Detection det = detect_symmetry(planted.cloud);
    REQUIRE(det.found);
    REQUIRE(det.generators.active_count() == 1);
    const ReflectionPlane& got = det.generators.active()[0];
    CHECK(angle_between(got, planted.mirror) * 180 / kPi <= 2.0);
    CHECK(std::abs(got.offset() - planted.mirror.offset()) <= 0.02);
    CHECK(det.group_order == 2);
  }
}

TEST_CASE("four-fold cloud picks the order-8 group") {
  Rng rng(10);
  const PointCloud cloud = four_fold_cloud(rng);
  const Detection det = detect_symmetry(cloud);
  REQUIRE(det.found);
  REQUIRE(det.generators.active_count() == 2);
  const auto planes = det.generators.active();
  CHECK(angle_between(planes[0], planes[1]) == doctest::Approx(kPi / 4).epsilon(1e-9));
  CHECK(det.group_order == 8);
  CHECK(det.domain_size * 8 <= cloud.size() + 16);
  // a single one of those mirrors also validates, yet the larger group wins
  CHECK(validate_symmetry(cloud, GeneratorSet({planes[0]}), 1e-6).ok);
}

TEST_CASE("asymmetric clouds give the empty set") {
  Rng rng(11);
  const PointCloud cloud(quartet::testing::blob_cloud(rng, 400, 5));
  const Detection det = detect_symmetry(cloud);
  CHECK_FALSE(det.found);
  CHECK(det.generators.empty());
  CHECK(detect_symmetry_group(cloud).flatten().isZero());

  CHECK(code_of([] { detect_symmetry(PointCloud(std::vector<Point3>(7, Point3(0, 0, 0)))); }) ==
        ErrorCode::kPrecondition);
}

TEST_CASE("detection is deterministic for a seed") {
  Rng rng(12);
  const auto planted = quartet::testing::planted_mirror(rng, 256);
  const Detection a = detect_symmetry(planted.cloud);
  const Detection b = detect_symmetry(planted.cloud);
  CHECK(a.generators.flatten() == b.generators.flatten());
  CHECK(a.residual == b.residual);
}
