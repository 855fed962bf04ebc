#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "grainpd/contact.hpp"
#include "grainpd/error.hpp"
#include "oracles.hpp"

using namespace grainpd;

namespace {

const Material kM1{1200.0, 0.0216e9, 0.01296e9, 50.0, 0.6e-3};
const Material kM2{1200.0, 2.0e9, 1.2e9, 500.0, 0.6e-3};

// Two square patches of nodes, the second shifted so that they overlap by
// `overlap` in x, with random velocities.
struct TwoPatches {
  std::vector<Vec2> cur, vel;
  std::vector<double> vol;
  std::vector<std::uint32_t> body_of;
  std::vector<ContactBody> bodies;
  std::vector<Material> materials{kM1, kM2};

  TwoPatches(double h, int n, double overlap, bool second_fixed, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.1 * h, 0.1 * h);
    std::uniform_real_distribution<double> speed(-0.5, 0.5);
    for (std::uint32_t b = 0; b < 2; ++b) {
      ContactBody cb;
      cb.begin = static_cast<std::uint32_t>(cur.size());
      cb.material = b;
      cb.fixed = b == 1 && second_fixed;
      cb.wall = cb.fixed;
      const double x0 = b == 0 ? 0.0 : (n - 1) * h - overlap;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          cur.push_back({x0 + i * h + jitter(rng), j * h + jitter(rng)});
          vel.push_back(cb.fixed ? Vec2{} : Vec2{speed(rng), speed(rng)});
          vol.push_back(h * h * (1.0 + 0.2 * speed(rng)));
          body_of.push_back(b);
          cb.volume += vol.back();
        }
      }
      cb.end = static_cast<std::uint32_t>(cur.size());
      bodies.push_back(cb);
    }
  }

  [[nodiscard]] ContactSystem system() const { return {cur, vel, vol, body_of, bodies, materials}; }

  [[nodiscard]] Vec2 resultant(std::span<const Vec2> f, std::uint32_t b) const {
    Vec2 s;
    for (std::uint32_t i = bodies[b].begin; i < bodies[b].end; ++i) s += vol[i] * f[i];
    return s;
  }
};

}  // namespace

TEST(ContactParams, EffectiveModulusAndSpring) {
  EXPECT_DOUBLE_EQ(effective_bulk_modulus(0.0216e9, 0.0216e9), 0.0216e9);
  EXPECT_NEAR(effective_bulk_modulus(0.0216e9, 2e9) / 4.27384e7, 1.0, 1e-5);
  const double kn = spring_modulus(0.0216e9, 6e-4);
  EXPECT_NEAR(kn / (18.0 * 2.16e7 / (std::numbers::pi * std::pow(6e-4, 5))), 1.0, 1e-14);
  EXPECT_NEAR(kn / 1.59e24, 1.0, 1e-3);
  const auto p = derive_contact_params(kM1, kM1, 0.1423e-3);
  EXPECT_DOUBLE_EQ(p.radius, 0.95 * 0.1423e-3);
  EXPECT_DOUBLE_EQ(p.kappa_eff, kM1.kappa);
  EXPECT_DOUBLE_EQ(p.stiffness, kn);
}

TEST(ContactParams, HarmonicMassAndViscosity) {
  EXPECT_DOUBLE_EQ(harmonic_mass(2.5, 2.5), 2.5);
  EXPECT_EQ(dashpot_viscosity(100.0, 1.0, 2e7, 1e-4, 1e-3), 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double e = 0.05; e < 1.0; e += 0.05) {
    const double beta = dashpot_viscosity(100.0, e, 2e7, 1e-4, 1e-3);
    EXPECT_LT(beta, prev) << e;
    EXPECT_GT(beta, 0.0);
    prev = beta;
  }
}

TEST(ContactPairs, SeparatedAndSingle) {
  const std::vector<Vec2> far{{0, 0}, {0.1, 0}, {1.0, 0}, {1.1, 0}};
  const std::vector<std::uint32_t> body{0, 0, 1, 1};
  EXPECT_TRUE(find_contact_pairs(far, body, 0.5).empty());
  const std::vector<Vec2> one{{0, 0}, {0.5, 0}};
  const std::vector<std::uint32_t> b2{0, 1};
  const auto pairs = find_contact_pairs(one, b2, 1.0);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].a, 0u);
  EXPECT_EQ(pairs[0].b, 1u);
  EXPECT_DOUBLE_EQ(pairs[0].distance, 0.5);
  EXPECT_DOUBLE_EQ(pairs[0].e_n.x, 1.0);
}

TEST(ContactPairs, MatchBruteForceOnRandomClouds) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n : {50u, 500u, 10000u}) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Vec2> z(n);
      std::vector<std::uint32_t> body(n);
      for (std::size_t i = 0; i < n; ++i) {
        body[i] = i < n / 2 ? 0 : 1;
        z[i] = {u(rng) + (body[i] == 1 ? 0.7 : 0.0), u(rng)};
      }
      const double radius = 0.6 / std::sqrt(static_cast<double>(n));
      const auto got = find_contact_pairs(z, body, radius);
      const auto want = oracle::cross_pairs(z, body, radius);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t k = 0; k < got.size(); ++k) {
        EXPECT_EQ(got[k].a, want[k].first);
        EXPECT_EQ(got[k].b, want[k].second);
      }
    }
  }
}

TEST(NormalForce, Examples) {
  EXPECT_EQ(normal_force({0, 0}, {1.5, 0}, 2.0, 3.0, 1.0), Vec2{});
  EXPECT_EQ(normal_force({0, 0}, {1.0, 0}, 2.0, 3.0, 1.0), Vec2{});
  const Vec2 f = normal_force({0, 0}, {0.5, 0}, 2.0, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(f.x, -3.0);
  EXPECT_DOUBLE_EQ(f.y, 0.0);
  EXPECT_THROW((void)normal_force({1, 1}, {1, 1}, 2.0, 3.0, 1.0), SingularContactError);
}

TEST(NormalForce, TotalsCancel) {
  const Vec2 z{0.1, 0.2};
  const Vec2 zp{0.4, -0.1};
  const double v = 0.7;
  const double vp = 1.9;
  const Vec2 f = normal_force(z, zp, 5.0, vp, 1.0);
  const Vec2 fp = normal_force(zp, z, 5.0, v, 1.0);
  const Vec2 total = v * f + vp * fp;
  EXPECT_NEAR(total.x, 0.0, 1e-14);
  EXPECT_NEAR(total.y, 0.0, 1e-14);
  const Vec2 feq = normal_force(zp, z, 5.0, vp, 1.0);
  EXPECT_DOUBLE_EQ(feq.x, -f.x);
  EXPECT_DOUBLE_EQ(feq.y, -f.y);
}

TEST(Friction, Examples) {
  const Vec2 en{1, 0};
  const Vec2 fn{-5, 0};
  EXPECT_EQ(friction_force(en, fn, {0, 1}, {0, 0}, 0.0), Vec2{});
  const Vec2 par = friction_force(en, fn, {2, 0}, {0, 0}, 0.4);
  EXPECT_DOUBLE_EQ(par.x, 0.0);
  EXPECT_DOUBLE_EQ(par.y, 0.0);
  EXPECT_EQ(friction_force(en, fn, {1, 1}, {1, 1}, 0.4), Vec2{});
  const Vec2 perp = friction_force(en, fn, {0, 3}, {0, 0}, 0.4);
  EXPECT_DOUBLE_EQ(perp.norm(), 2.0);
  EXPECT_LT(perp.y, 0.0);  // opposes the node's sliding direction
}

TEST(DampingNode, GatesAndStrength) {
  // Separating: no force.
  EXPECT_EQ(damping_node({0, 0}, {0.5, 0}, {-1, 0}, {0, 0}, 1.0, 10.0, 2.0), Vec2{});
  // Outside the spring range: no force.
  EXPECT_EQ(damping_node({0, 0}, {1.5, 0}, {1, 0}, {0, 0}, 1.0, 10.0, 2.0), Vec2{});
  // Approaching: (1/V) beta delta_dot e_n with delta_dot = -1.
  const Vec2 f = damping_node({0, 0}, {0.5, 0}, {1, 0}, {0, 0}, 1.0, 10.0, 2.0);
  EXPECT_DOUBLE_EQ(f.x, -5.0);
  EXPECT_DOUBLE_EQ(f.y, 0.0);
  const double beta = dashpot_viscosity(100.0, 1.0, 1e7, 1e-4, harmonic_mass(1.0, 1.0));
  EXPECT_EQ(beta, 0.0);
}

TEST(DampingCenter, GatesAndStrength) {
  EXPECT_EQ(damping_center({0, 0}, {0, 3}, {0, 1}, {0, 0}, 1.0, 1.0, 5.0, 2.0), Vec2{});
  EXPECT_EQ(damping_center({0, 0}, {0, 3}, {0, -1}, {0, 0}, 0.5, 1.0, 5.0, 2.0), Vec2{});
  const Vec2 f = damping_center({0, 0}, {0, 3}, {0, 1}, {0, 0}, 0.5, 1.0, 5.0, 2.0);
  EXPECT_DOUBLE_EQ(f.x, 0.0);
  EXPECT_DOUBLE_EQ(f.y, -2.5);
  EXPECT_THROW((void)damping_center({0, 0}, {0, 0}, {0, 1}, {0, 0}, 0.5, 1.0, 5.0, 2.0), SingularContactError);
}

TEST(SelfContact, BrokenBondsOnly) {
  const std::vector<Vec2> x{{0, 0}, {0.5, 0}, {3, 0}, {3.9, 0}};
  const std::vector<double> vol{1.0, 2.0, 1.0, 1.0};
  auto g = build_bond_graph(x, vol, 1.0);
  std::vector<Vec2> f(4);
  self_contact_forces(g, x, vol, 2.0, 1.0, f);
  for (const auto& v : f) EXPECT_EQ(v, Vec2{});

  for (auto& h : g.intact) h = 0;
  self_contact_forces(g, x, vol, 2.0, 1.0, f);
  EXPECT_LT(f[0].x, 0.0);
  EXPECT_GT(f[1].x, 0.0);
  EXPECT_NEAR(vol[0] * f[0].x + vol[1] * f[1].x, 0.0, 1e-15);
  EXPECT_LT(f[2].x, 0.0);
  std::vector<Vec2> f2(4);
  self_contact_forces(g, x, vol, 2.0, 0.5, f2);
  for (const auto& v : f2) EXPECT_EQ(v, Vec2{});
}

TEST(ContactModel, PairSymmetryWithFrictionAndNodeDamping) {
  TwoPatches s(0.1, 8, 0.05, false, 4);
  ContactConfig cfg;
  cfg.damping_model = DampingModel::node;
  cfg.eps_n = 0.7;
  cfg.friction_enabled = true;
  cfg.friction_mu = 0.4;
  ContactModel model(cfg, 0.095);
  const auto sys = s.system();
  model.update_pairs(sys, 0);
  ASSERT_FALSE(model.pairs().empty());
  std::vector<Vec2> f(s.cur.size());
  model.accumulate(sys, f);
  const Vec2 a = s.resultant(f, 0);
  const Vec2 b = s.resultant(f, 1);
  EXPECT_GT(a.norm(), 0.0);
  EXPECT_LT((a + b).norm(), 1e-9 * a.norm());
}

TEST(ContactModel, WallReactionIsOppositeOfParticleForce) {
  TwoPatches s(0.1, 8, 0.05, true, 9);
  ContactConfig cfg;
  cfg.damping_model = DampingModel::center;
  cfg.eps_bar_n = 0.8;
  cfg.friction_enabled = true;
  cfg.friction_mu = 0.3;
  ContactModel model(cfg, 0.095);
  const auto sys = s.system();
  model.update_pairs(sys, 0);
  std::vector<Vec2> f(s.cur.size());
  model.accumulate(sys, f);
  const Vec2 p = s.resultant(f, 0);
  const Vec2 w = s.resultant(f, 1);
  EXPECT_GT(p.norm(), 0.0);
  EXPECT_LT((p + w).norm(), 1e-9 * p.norm());
}

TEST(ContactModel, NoForceBeyondRadius) {
  TwoPatches s(0.1, 6, -0.2, false, 2);
  ContactConfig cfg;
  cfg.damping_model = DampingModel::center;
  cfg.eps_bar_n = 0.5;
  cfg.friction_enabled = true;
  cfg.friction_mu = 0.5;
  ContactModel model(cfg, 0.095);
  const auto sys = s.system();
  model.update_pairs(sys, 0);
  EXPECT_TRUE(model.pairs().empty());
  std::vector<Vec2> f(s.cur.size());
  model.accumulate(sys, f);
  for (const auto& v : f) EXPECT_EQ(v, Vec2{});
}

TEST(ContactModel, ReusedCandidatesGiveSamePairs) {
  TwoPatches s(0.1, 8, 0.05, false, 13);
  ContactConfig every;
  ContactConfig reuse;
  reuse.rebuild_every = 5;
  ContactModel a(every, 0.095);
  ContactModel b(reuse, 0.095);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-0.001, 0.001);
  for (int step = 0; step < 12; ++step) {
    for (auto& z : s.cur) z += Vec2{d(rng), d(rng)};
    const auto sys = s.system();
    EXPECT_EQ(a.update_pairs(sys, step), b.update_pairs(sys, step)) << step;
  }
}

TEST(ContactConfig, Validation) {
  ContactConfig c;
  EXPECT_NO_THROW(validate(c));
  c.eps_bar_n = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c.eps_bar_n = 1.2;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.eps_n = -0.1;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.friction_mu = -1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.radius = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_EQ(damping_model_from_string("node"), DampingModel::node);
  EXPECT_THROW((void)damping_model_from_string("sticky"), ConfigError);
}
