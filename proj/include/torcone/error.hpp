#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace torcone {

class Error : public std::runtime_error {
public:
    Error(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

class PreconditionError : public Error { using Error::Error; };
class QuadratureError : public Error { using Error::Error; };
class MeshQualityError : public Error { using Error::Error; };
class LocationError : public Error { using Error::Error; };
class MeanConvexityError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

class SolverError : public Error {
public:
    SolverError(std::string where, const std::string& what, std::vector<double> history)
        : Error(std::move(where), what), history_(std::move(history)) {}
    const std::vector<double>& residual_history() const { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace torcone
