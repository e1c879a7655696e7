#pragma once

#include <Eigen/Dense>
#include <random>

#include "minicar/vehicle.hpp"

namespace minicar {

struct PoseMeasurement {
  int vehicle{-1};
  double timestamp{0.0};
  double x{0.0};
  double y{0.0};
  double theta{0.0};
};

struct MeasurementNoise {
  double sigma_xy{0.001};
  double sigma_theta{0.0031622776601683794};
};

/// Ground-truth pose plus zero-mean Gaussian noise; theta wrapped to (-pi, pi].
PoseMeasurement emulate_measurement(const VehicleState& truth, int vehicle, double timestamp,
                                    const MeasurementNoise& noise, std::mt19937_64& rng);

using StateVector = Eigen::Matrix<double, 5, 1>;   // x, y, theta, v, psi
using StateMatrix = Eigen::Matrix<double, 5, 5>;
using PoseCovariance = Eigen::Matrix3d;

struct EstimatorState {
  StateVector mean{StateVector::Zero()};
  StateMatrix covariance{StateMatrix::Zero()};
};

struct EkfModel {
  double wheelbase{0.122};
  StateMatrix process_noise{
      StateVector(1e-6, 1e-6, 1e-6, 1e-4, 1e-4).asDiagonal()};
  PoseCovariance measurement_noise{Eigen::Vector3d(1e-6, 1e-6, 1e-5).asDiagonal()};
};

/// Bicycle-model propagation of the mean with v and psi held.
StateVector ekf_propagate(const StateVector& mean, double dt, double wheelbase);

/// Analytic Jacobian of ekf_propagate with respect to the state.
StateMatrix ekf_jacobian(const StateVector& mean, double dt, double wheelbase);

EstimatorState ekf_predict(const EstimatorState& est, double dt, const EkfModel& model);

/// Pose update with an angle-wrapped innovation (Joseph form, symmetrized).
EstimatorState ekf_update(const EstimatorState& est, const PoseMeasurement& meas,
                          const PoseCovariance& r);

EstimatorState estimator_from_truth(const VehicleState& truth, const StateVector& initial_sigma);

}  // namespace minicar
