// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twinlight {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed document text. `position()` is the byte offset reported by the parser.
class ParseError : public Error {
public:
    ParseError(const std::string &what, std::size_t position)
        : Error(what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// A domain invariant was violated. `subject()` names the offending id (may be empty).
class ValidationError : public Error {
public:
    ValidationError(const std::string &what, std::string subject = {})
        : Error(what), subject_(std::move(subject)) {}
    const std::string &subject() const noexcept { return subject_; }

private:
    std::string subject_;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

class ImageError : public Error {
public:
    using Error::Error;
};

// Encoder failures are kept distinct so callers can tell a dead endpoint from a bad reply.
class EncoderError : public Error {
public:
    using Error::Error;
};

class EncoderConnectionError : public EncoderError {
public:
    using EncoderError::EncoderError;
};

class EncoderProtocolError : public EncoderError {
public:
    using EncoderError::EncoderError;
};

class EncoderValueError : public EncoderError {
public:
    using EncoderError::EncoderError;
};

class MismatchError : public Error {
public:
    using Error::Error;
};

}  // namespace twinlight
