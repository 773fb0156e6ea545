#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace spatialforge {

template <class S> using Vec2 = Eigen::Matrix<S, 2, 1>;
template <class S> using Vec3 = Eigen::Matrix<S, 3, 1>;
template <class S> using Mat3 = Eigen::Matrix<S, 3, 3>;
template <class S> using Mat4 = Eigen::Matrix<S, 4, 4>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Mat4d = Mat4<double>;

/// Bad input (manifest, config, CLI arguments). Maps to exit code 1.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
    InputError(const std::string& json_path, const std::string& msg)
        : std::runtime_error(json_path + ": " + msg), path_(json_path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Engine-side failure (IO, adapter contract violation, pipeline abort). Exit code 2.
class EngineError : public std::runtime_error {
public:
    explicit EngineError(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr const char* kEngineVersion = "0.1.0";

} // namespace spatialforge
