#pragma once

#include <stdexcept>
#include <string>

namespace bspsk {

// Common base so callers can catch everything thrown by this library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or scenario configuration (exit code 1 territory).
class config_error : public error {
public:
  using error::error;
};

// Signals that should line up (rate, length, t0) but do not.
class dimension_error : public error {
public:
  using error::error;
};

// Bit streams or waveforms whose length does not match the symbol framing.
class framing_error : public error {
public:
  using error::error;
};

// Mathematically invalid request (harmonic 0, zero-power input,
// narrowband approximation outside its validity region).
class domain_error : public error {
public:
  using error::error;
};

// Frequency outside the representable range of a sampled signal.
class range_error : public error {
public:
  using error::error;
};

// Not enough samples or valid points to produce a result.
class insufficient_data_error : public error {
public:
  using error::error;
};

// File read/write failures, with the path in the message.
class io_error : public error {
public:
  using error::error;
};

} // namespace bspsk
