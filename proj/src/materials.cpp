#include "rto/materials.hpp"

#include <cmath>
#include <cstdio>

#include "rto/errors.hpp"

namespace rto {

MaterialLaw MaterialLaw::air(const MaterialConstants& c) {
  MaterialLaw law;
  law.kind = LawKind::air;
  law.nu0 = c.nu0;
  law.nu = c.nu0;
  return law;
}

MaterialLaw MaterialLaw::iron(const MaterialConstants& c, int kf_binding) {
  MaterialLaw law;
  law.kind = LawKind::iron;
  law.nu0 = c.nu0;
  law.nuf = c.nuf;
  law.kf = c.kf;
  law.nf = c.nf;
  law.kf_binding = kf_binding;
  return law;
}

MaterialLaw MaterialLaw::linear(double nu) {
  MaterialLaw law;
  law.kind = LawKind::linear;
  law.nu = nu;
  return law;
}

MaterialLaw MaterialLaw::magnet(double phi, const MaterialConstants& c) {
  MaterialLaw law;
  law.kind = LawKind::magnet;
  law.nu0 = c.nu0;
  law.nu = c.num;
  law.br = c.br;
  law.phi = phi;
  return law;
}

double MaterialLaw::saturation(const Params& q) const {
  if (kf_binding < 0) return kf;
  if (kf_binding >= q.size()) throw UsageError("material law binds a parameter entry that q does not have");
  return q[kf_binding];
}

MaterialLaw MaterialLaw::with_saturation(double k) const {
  MaterialLaw law = *this;
  law.kf = k;
  law.kf_binding = -1;
  return law;
}

namespace {

struct IronTerms {
  double scale;  // K s^(-1/N)
  double s;      // K^N + |b|^N
  double bn;     // |b|^N
};

IronTerms iron_terms(const MaterialLaw& law, double k, const Vec2& b) {
  const double bn = std::pow(b.norm(), law.nf);
  const double s = std::pow(k, law.nf) + bn;
  return {k * std::pow(s, -1.0 / law.nf), s, bn};
}

}  // namespace

Vec2 eval_h(const MaterialLaw& law, const Vec2& b, const Params& q) {
  switch (law.kind) {
    case LawKind::air:
    case LawKind::linear:
      return law.nu * b;
    case LawKind::magnet:
      return law.nu * (b - law.br * Vec2(std::cos(law.phi), std::sin(law.phi)));
    case LawKind::iron: {
      const IronTerms t = iron_terms(law, law.saturation(q), b);
      return (law.nu0 + (law.nuf - law.nu0) * t.scale) * b;
    }
  }
  return Vec2::Zero();
}

Mat2 eval_dh_db(const MaterialLaw& law, const Vec2& b, const Params& q) {
  if (law.kind != LawKind::iron) return law.nu * Mat2::Identity();
  const IronTerms t = iron_terms(law, law.saturation(q), b);
  const double norm = b.norm();
  const double weight = norm > 0.0 ? std::pow(norm, law.nf - 2) / t.s : 0.0;
  const Mat2 shape = Mat2::Identity() - weight * b * b.transpose();
  return law.nu0 * Mat2::Identity() + (law.nuf - law.nu0) * t.scale * shape;
}

Eigen::Matrix<double, 2, Eigen::Dynamic> eval_dh_dq(const MaterialLaw& law, const Vec2& b, const Params& q) {
  Eigen::Matrix<double, 2, Eigen::Dynamic> out = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, q.size());
  if (law.kind != LawKind::iron || law.kf_binding < 0) return out;
  const IronTerms t = iron_terms(law, law.saturation(q), b);
  out.col(law.kf_binding) = (law.nuf - law.nu0) * t.bn * std::pow(t.s, -1.0 - 1.0 / law.nf) * b;
  return out;
}

std::string fingerprint(const MaterialLaw& law) {
  char buf[256];
  switch (law.kind) {
    case LawKind::air:
      std::snprintf(buf, sizeof buf, "air(nu=%.17g)", law.nu);
      break;
    case LawKind::linear:
      std::snprintf(buf, sizeof buf, "linear(nu=%.17g)", law.nu);
      break;
    case LawKind::magnet:
      std::snprintf(buf, sizeof buf, "magnet(nu=%.17g,br=%.17g,phi=%.17g)", law.nu, law.br, law.phi);
      break;
    case LawKind::iron:
      std::snprintf(buf, sizeof buf, "iron(nu0=%.17g,nuf=%.17g,kf=%.17g,nf=%d)", law.nu0, law.nuf, law.kf, law.nf);
      break;
  }
  return buf;
}

}  // namespace rto
