#pragma once

#include <Eigen/Dense>
#include <vector>

namespace esp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec3List = std::vector<Vec3>;

// Potential and kinetic parts of an instantaneous pressure tensor, kept apart.
struct PressureTensor {
    Mat3 kinetic = Mat3::Zero();
    Mat3 near = Mat3::Zero();
    Mat3 far = Mat3::Zero();
    Mat3 correction = Mat3::Zero();

    Mat3 potential() const { return near + far + correction; }
    Mat3 total() const { return kinetic + near + far + correction; }
};

} // namespace esp
