#include <vfoa/dynamics.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <string>

namespace vfoa {

namespace {

bool is_spd(const Mat2& m) {
  if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff())) return false;
  return m(0, 0) > 0.0 && m.determinant() > 0.0;
}

template <int N>
Eigen::Matrix<double, N, N> floor_impl(const Eigen::Matrix<double, N, N>& m, double floor) {
  const Eigen::Matrix<double, N, N> s = symmetrized(m);
  // s - floor I positive definite means every eigenvalue already exceeds the floor
  using Id = Eigen::Matrix<double, N, N>;
  if (s.allFinite() && Eigen::LLT<Id>(s - floor * Id::Identity()).info() == Eigen::Success) return s;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> eig(s);
  if (eig.info() != Eigen::Success) throw NumericalError("floor_eigenvalues: eigen decomposition failed");
  if (eig.eigenvalues().minCoeff() >= floor) return s;
  const auto d = eig.eigenvalues().cwiseMax(floor);
  return symmetrized(Eigen::Matrix<double, N, N>(eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose()));
}

}  // namespace

Mat8 ModelParams::gamma_L() const { return process_noise(gamma_G, gamma_Gdot, gamma_R, gamma_Rdot); }

void ModelParams::validate() const {
  for (int a = 0; a < 2; ++a) {
    if (!(alpha[a] > 0.0 && alpha[a] < 1.0)) throw InvalidArgument("model params: alpha entries must lie in (0, 1)");
    if (!(beta[a] > 0.0 && beta[a] < 1.0)) throw InvalidArgument("model params: beta entries must lie in (0, 1)");
  }
  const std::pair<const char*, const Mat2*> blocks[] = {{"gamma_G", &gamma_G},       {"gamma_Gdot", &gamma_Gdot},
                                                        {"gamma_R", &gamma_R},       {"gamma_Rdot", &gamma_Rdot},
                                                        {"sigma_H", &sigma_H}};
  for (const auto& [name, m] : blocks) {
    if (!is_spd(*m)) throw InvalidArgument(std::string("model params: ") + name + " is not symmetric positive definite");
  }
}

Mat28 emission_matrix(const Vec2& alpha) {
  Mat28 C = Mat28::Zero();
  C(0, kGaze) = alpha[0];
  C(0, kRef) = 1.0 - alpha[0];
  C(1, kGaze + 1) = alpha[1];
  C(1, kRef + 1) = 1.0 - alpha[1];
  return C;
}

TransitionSystem transition_system(int j, const Vec2& beta, const std::optional<Vec2>& target_dir, double dt) {
  if ((j != 0) != target_dir.has_value()) {
    throw InvalidArgument("transition_system: a target direction is required iff j != 0");
  }
  TransitionSystem sys{Mat8::Identity(), Vec8::Zero()};
  sys.A.block<2, 2>(kGaze, kGazeVel) = dt * Mat2::Identity();
  sys.A.block<2, 2>(kRef, kRefVel) = dt * Mat2::Identity();
  if (j != 0) {
    sys.A.block<2, 2>(kGaze, kGaze) = beta.asDiagonal();
    sys.b.segment<2>(kGaze) = (Vec2::Ones() - beta).cwiseProduct(*target_dir);
  }
  return sys;
}

TransitionSystem transition_system(const Scene& scene, int i, int j, const Vec2& beta,
                                   const std::vector<std::optional<Position3D>>& positions, double dt,
                                   double reference_pan) {
  if (j == i) throw InvalidArgument("transition_system: a person cannot look at itself");
  if (j == 0) return transition_system(0, beta, std::nullopt, dt);
  if (j < 0 || j > scene.n_targets()) throw InvalidArgument("transition_system: label out of range");
  const auto& src = positions.at(static_cast<std::size_t>(i));
  const auto& dst = positions.at(static_cast<std::size_t>(j));
  if (!src || !dst) throw InvalidArgument("transition_system: missing target position");
  const Direction d = direction_from_points(*src, *dst);
  const Vec2 x{unwrap_near(d.pan(), reference_pan), d.tilt()};
  return transition_system(j, beta, x, dt);
}

Mat8 process_noise(const Mat2& gamma_G, const Mat2& gamma_Gdot, const Mat2& gamma_R, const Mat2& gamma_Rdot) {
  const std::pair<const char*, const Mat2*> blocks[] = {
      {"gamma_G", &gamma_G}, {"gamma_Gdot", &gamma_Gdot}, {"gamma_R", &gamma_R}, {"gamma_Rdot", &gamma_Rdot}};
  Mat8 g = Mat8::Zero();
  int off = 0;
  for (const auto& [name, m] : blocks) {
    if (!is_spd(*m)) throw InvalidArgument(std::string("process_noise: ") + name + " is not SPD");
    g.block<2, 2>(off, off) = *m;
    off += 2;
  }
  return g;
}

double gaussian_logpdf(const Vec2& x, const Vec2& mean, const Mat2& cov) {
  const Mat2 s = symmetrized(cov);
  Eigen::SelfAdjointEigenSolver<Mat2> eig(s);
  const double lo = eig.eigenvalues()[0];
  const double hi = eig.eigenvalues()[1];
  if (!(lo > 0.0) || hi / lo > 1e12) throw NumericalError("gaussian_logpdf: covariance is singular or ill-conditioned");
  const Vec2 r = wrap_delta(x, mean);
  const Vec2 z = eig.eigenvectors().transpose() * r;
  const double quad = z[0] * z[0] / lo + z[1] * z[1] / hi;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(lo * hi) - 0.5 * quad;
}

double predictive_obs_log_likelihood(const Vec8& mu_prev, const Mat8& cov_prev, const Mat8& A, const Vec8& b,
                                     const Mat28& C, const Mat8& gamma_L, const Mat2& sigma_H, const Vec2& H) {
  const Vec8 m = A * mu_prev + b;
  const Mat8 P = A * cov_prev * A.transpose() + gamma_L;
  const Mat2 S = C * P * C.transpose() + sigma_H;
  return gaussian_logpdf(H, C * m, S);
}

Mat2 floor_eigenvalues(const Mat2& m, double floor) { return floor_impl<2>(m, floor); }
Mat8 floor_eigenvalues(const Mat8& m, double floor) { return floor_impl<8>(m, floor); }

}  // namespace vfoa
