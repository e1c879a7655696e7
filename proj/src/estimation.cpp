#include "minicar/estimation.hpp"

#include <cmath>
#include <numbers>

#include "minicar/track.hpp"

namespace minicar {

PoseMeasurement emulate_measurement(const VehicleState& truth, int vehicle, double timestamp,
                                    const MeasurementNoise& noise, std::mt19937_64& rng) {
  PoseMeasurement m{vehicle, timestamp, truth.x, truth.y, truth.theta};
  if (noise.sigma_xy > 0.0) {
    std::normal_distribution<double> n_xy(0.0, noise.sigma_xy);
    m.x += n_xy(rng);
    m.y += n_xy(rng);
  }
  if (noise.sigma_theta > 0.0) {
    std::normal_distribution<double> n_th(0.0, noise.sigma_theta);
    m.theta += n_th(rng);
  }
  m.theta = wrap_angle(m.theta);
  return m;
}

StateVector ekf_propagate(const StateVector& mean, double dt, double wheelbase) {
  const PoseRate p = integrate_pose(mean(0), mean(1), mean(2), mean(3), mean(4), dt, wheelbase);
  StateVector out = mean;
  out(0) = p.x;
  out(1) = p.y;
  out(2) = std::remainder(p.theta, 2.0 * std::numbers::pi);
  return out;
}

StateMatrix ekf_jacobian(const StateVector& mean, double dt, double wheelbase) {
  const double th = mean(2), v = mean(3), psi = mean(4);
  const double c = std::cos(th), s = std::sin(th);
  const double cp = std::cos(psi);
  StateMatrix f = StateMatrix::Identity();
  f(0, 2) = -v * s * dt;
  f(0, 3) = c * dt;
  f(1, 2) = v * c * dt;
  f(1, 3) = s * dt;
  f(2, 3) = std::tan(psi) / wheelbase * dt;
  f(2, 4) = v / (wheelbase * cp * cp) * dt;
  return f;
}

EstimatorState ekf_predict(const EstimatorState& est, double dt, const EkfModel& model) {
  const StateMatrix f = ekf_jacobian(est.mean, dt, model.wheelbase);
  EstimatorState out;
  out.mean = ekf_propagate(est.mean, dt, model.wheelbase);
  out.covariance = f * est.covariance * f.transpose() + model.process_noise;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

EstimatorState ekf_update(const EstimatorState& est, const PoseMeasurement& meas,
                          const PoseCovariance& r) {
  Eigen::Matrix<double, 3, 5> h = Eigen::Matrix<double, 3, 5>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  h(2, 2) = 1.0;
  const Eigen::Vector3d innovation(meas.x - est.mean(0), meas.y - est.mean(1),
                                   wrap_angle(meas.theta - est.mean(2)));
  const Eigen::Matrix3d s = h * est.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 5, 3> k = est.covariance * h.transpose() * s.inverse();
  EstimatorState out;
  out.mean = est.mean + k * innovation;
  out.mean(2) = wrap_angle(out.mean(2));
  const StateMatrix ikh = StateMatrix::Identity() - k * h;
  out.covariance = ikh * est.covariance * ikh.transpose() + k * r * k.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

EstimatorState estimator_from_truth(const VehicleState& truth, const StateVector& initial_sigma) {
  EstimatorState est;
  est.mean << truth.x, truth.y, truth.theta, truth.v, truth.psi;
  est.covariance = initial_sigma.cwiseProduct(initial_sigma).asDiagonal();
  return est;
}

}  // namespace minicar
