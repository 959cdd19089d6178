#pragma once

#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rto {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Params = Eigen::VectorXd;

/// Table of constitutive constants (SI units).
struct MaterialConstants {
  double nu0 = 1e7 / (4.0 * std::numbers::pi);
  double nuf = 200.0;
  double kf = 2.2;
  int nf = 12;
  double num = 1e7 / (4.0 * std::numbers::pi) / 1.086;
  double br = 1.216;
  double phi1 = 30.0 * std::numbers::pi / 180.0;
  double phi2 = 15.0 * std::numbers::pi / 180.0;
};

enum class LawKind { air, iron, linear, magnet };

/// One isotropic (air, iron, linear) or remanent (magnet) law.
///   air:    h = nu0 b
///   linear: h = nu b
///   iron:   h = nu0 b + (nuf - nu0) K / (K^N + |b|^N)^(1/N) b
///   magnet: h = num (b - br e_phi)
/// An iron law with `kf_binding >= 0` reads K from q[kf_binding].
struct MaterialLaw {
  LawKind kind = LawKind::air;
  double nu0 = 1e7 / (4.0 * std::numbers::pi);
  double nu = 1e7 / (4.0 * std::numbers::pi);
  double nuf = 200.0;
  double kf = 2.2;
  int nf = 12;
  double br = 0.0;
  double phi = 0.0;
  int kf_binding = -1;

  static MaterialLaw air(const MaterialConstants& c = {});
  static MaterialLaw iron(const MaterialConstants& c = {}, int kf_binding = -1);
  static MaterialLaw linear(double nu);
  static MaterialLaw magnet(double phi, const MaterialConstants& c = {});

  /// Saturation constant in effect for parameter point q.
  double saturation(const Params& q) const;
  /// Same law with K fixed to `k` and no binding.
  MaterialLaw with_saturation(double k) const;
};

Vec2 eval_h(const MaterialLaw& law, const Vec2& b, const Params& q = {});
Mat2 eval_dh_db(const MaterialLaw& law, const Vec2& b, const Params& q = {});
/// One column per entry of q; zero columns for entries the law does not bind.
Eigen::Matrix<double, 2, Eigen::Dynamic> eval_dh_dq(const MaterialLaw& law, const Vec2& b, const Params& q);

/// Text key identifying a law's kind and constants, stable across runs.
std::string fingerprint(const MaterialLaw& law);

/// Element-wise law assignment. `element_law[e]` indexes `laws`.
struct MaterialField {
  std::vector<MaterialLaw> laws;
  std::vector<int> element_law;
  Params q;

  const MaterialLaw& law(int element) const { return laws[element_law[element]]; }
  Vec2 h(int element, const Vec2& b) const { return eval_h(law(element), b, q); }
  Mat2 dh_db(int element, const Vec2& b) const { return eval_dh_db(law(element), b, q); }
};

}  // namespace rto
