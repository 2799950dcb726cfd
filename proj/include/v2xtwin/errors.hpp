#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace v2xtwin {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario, trace or config text. Carries the 1-based line when known.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::optional<std::size_t> line = std::nullopt)
      : Error(line ? "line " + std::to_string(*line) + ": " + what : what), line_(line) {}
  [[nodiscard]] std::optional<std::size_t> line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

/// Non-planar, non-convex or degenerate surface; index is the surface position in load order.
class GeometryError : public Error {
 public:
  GeometryError(const std::string& what, std::size_t surface_index)
      : Error("surface " + std::to_string(surface_index) + ": " + what), index_(surface_index) {}
  [[nodiscard]] std::size_t surface_index() const { return index_; }

 private:
  std::size_t index_;
};

class UnknownVehicle : public Error {
 public:
  using Error::Error;
};

class DuplicateVehicle : public Error {
 public:
  using Error::Error;
};

class InactiveVehicle : public Error {
 public:
  using Error::Error;
};

class NonMonotonicTime : public Error {
 public:
  NonMonotonicTime(std::uint32_t vehicle, std::size_t row)
      : Error("non-monotonic timestamp for vehicle " + std::to_string(vehicle) + " at row " +
              std::to_string(row)),
        vehicle_(vehicle),
        row_(row) {}
  [[nodiscard]] std::uint32_t vehicle() const { return vehicle_; }
  [[nodiscard]] std::size_t row() const { return row_; }

 private:
  std::uint32_t vehicle_;
  std::size_t row_;
};

/// An antenna sits inside a vehicle mesh, or tx and rx coincide.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class NonPositiveDistance : public Error {
 public:
  using Error::Error;
};

/// A vehicle tried to hold two overlapping transmissions.
class HalfDuplexViolation : public Error {
 public:
  using Error::Error;
};

class NoDesiredOverlap : public Error {
 public:
  using Error::Error;
};

class EmptySeries : public Error {
 public:
  using Error::Error;
};

class PayloadTooLarge : public Error {
 public:
  using Error::Error;
};

/// Bad magic, version, type or length in a wire frame.
class FrameError : public Error {
 public:
  explicit FrameError(const std::string& what, std::optional<std::uint8_t> version = std::nullopt)
      : Error(what), version_(version) {}
  [[nodiscard]] std::optional<std::uint8_t> version() const { return version_; }

 private:
  std::optional<std::uint8_t> version_;
};

class TruncatedFrame : public Error {
 public:
  using Error::Error;
};

}  // namespace v2xtwin
