#pragma once

#include <stdexcept>
#include <string>

namespace causalcert {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateFactor : public Error { public: using Error::Error; };
class UnknownFactor : public Error { public: using Error::Error; };
class DimMismatch : public Error { public: using Error::Error; };
class NotHermitian : public Error { public: using Error::Error; };
class InvalidParam : public Error { public: using Error::Error; };
class FrameError : public Error { public: using Error::Error; };
class NotAWitness : public Error { public: using Error::Error; };
class InvalidBracket : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };

// Raised when the conic solver stops without reaching the requested accuracy.
class SolverError : public Error {
 public:
  SolverError(const std::string& status, const std::string& what)
      : Error(what), status_(status) {}
  const std::string& status() const { return status_; }

 private:
  std::string status_;
};

}  // namespace causalcert
