#include "insdvl/dvl.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace insdvl {

Mat4x3 beam_matrix(double pitch_rad) {
  if (!(pitch_rad > 0.0 && pitch_rad < kPi / 2.0)) {
    throw std::invalid_argument("beam_matrix: pitch angle must lie in (0, pi/2)");
  }
  const double sa = std::sin(pitch_rad);
  const double ca = std::cos(pitch_rad);
  Mat4x3 h;
  for (int i = 0; i < 4; ++i) {
    const double psi = i * (kPi / 2.0) + kPi / 4.0;
    h.row(i) << std::cos(psi) * sa, std::sin(psi) * sa, ca;
  }
  return h;
}

DvlErrorModel DvlErrorModel::with_scalar_scale(double s, double sigma, const Vec4& b) {
  DvlErrorModel e;
  e.scale = Vec4::Constant(s);
  e.noise_std = sigma;
  e.bias = b;
  return e;
}

DvlBeamSet simulate_beams(double t, const Vec3& v_dvl, const DvlGeometry& geom,
                          const DvlErrorModel& err, std::mt19937_64& rng) {
  if (!v_dvl.allFinite()) {
    throw std::invalid_argument("simulate_beams: non-finite velocity");
  }
  const Mat4x3 h = geom.beam_directions();
  DvlBeamSet out;
  out.t = t;
  const Vec4 ideal = h * v_dvl;
  out.beams = ideal.cwiseProduct(Vec4::Ones() + err.scale) + err.bias;
  if (err.noise_std > 0.0) {
    std::normal_distribution<double> n(0.0, err.noise_std);
    for (int i = 0; i < 4; ++i) out.beams[i] += n(rng);
  }
  return out;
}

Vec3 ls_velocity(const DvlBeamSet& beams, const DvlGeometry& geom) {
  const Mat4x3 h = geom.beam_directions();
  const Mat3 normal = h.transpose() * h;
  Eigen::LDLT<Mat3> ldlt(normal);
  if (ldlt.info() != Eigen::Success || ldlt.isNegative() ||
      normal.determinant() < 1e-12) {
    throw std::runtime_error("ls_velocity: singular beam normal matrix");
  }
  return ldlt.solve(h.transpose() * beams.beams);
}

namespace {

void check_window(const VelocityWindow& window, int min_size) {
  if (static_cast<int>(window.size()) < min_size) {
    throw std::invalid_argument("velocity window: need at least " +
                                std::to_string(min_size) + " samples");
  }
  for (size_t i = 1; i < window.size(); ++i) {
    if (!(window[i].t > window[i - 1].t)) {
      throw std::invalid_argument("velocity window: timestamps must be strictly increasing");
    }
  }
}

}  // namespace

PolyFit fit_velocity_poly(const VelocityWindow& window, int order) {
  if (order < 1) throw std::invalid_argument("fit_velocity_poly: order must be >= 1");
  check_window(window, order);
  const int m = static_cast<int>(window.size());
  const double t0 = window.front().t;

  // Taylor design matrix: L(i, k) = (t_i - t0)^k / k!
  Eigen::MatrixXd l(m, order);
  Eigen::Matrix<double, Eigen::Dynamic, 3> vh(m, 3);
  for (int i = 0; i < m; ++i) {
    const double dt = window[i].t - t0;
    double term = 1.0;
    for (int k = 0; k < order; ++k) {
      l(i, k) = term;
      term *= dt / (k + 1);
    }
    vh.row(i) = window[i].v.transpose();
  }

  const Eigen::MatrixXd normal = l.transpose() * l;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(normal);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e12) {
    throw std::runtime_error(
        "fit_velocity_poly: ill-conditioned normal matrix; reduce the window "
        "span or the fit order");
  }

  PolyFit fit;
  fit.order = order;
  fit.t0 = t0;
  fit.derivatives = normal.ldlt().solve(l.transpose() * vh);
  return fit;
}

Vec3 extract_acceleration(const VelocityWindow& window) {
  check_window(window, 2);
  const int m = static_cast<int>(window.size());
  const double t0 = window.front().t;

  // Slope of the straight-line LS fit: normal matrix [[m, Sd], [Sd, Sdd]].
  double sd = 0.0, sdd = 0.0;
  Vec3 sv = Vec3::Zero(), sdv = Vec3::Zero();
  for (const auto& s : window) {
    const double d = s.t - t0;
    sd += d;
    sdd += d * d;
    sv += s.v;
    sdv += d * s.v;
  }
  const double det = m * sdd - sd * sd;
  if (det <= 0.0) {
    throw std::runtime_error("extract_acceleration: degenerate window timing");
  }
  return (static_cast<double>(m) * sdv - sd * sv) / det;
}

}  // namespace insdvl
