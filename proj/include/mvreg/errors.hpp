#pragma once

#include <stdexcept>
#include <string>

namespace mvreg {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too few or collinear pairs for a rigid fit.
class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};

class EmptyCloud : public Error {
public:
    EmptyCloud() : Error("point cloud is empty") {}
    using Error::Error;
};

class TooFewPoints : public Error {
public:
    using Error::Error;
};

class SparseNeighborhood : public Error {
public:
    using Error::Error;
};

class DegeneratePoint : public Error {
public:
    using Error::Error;
};

class NullDescriptor : public Error {
public:
    NullDescriptor() : Error("descriptor is null") {}
};

class NoValidDescriptors : public Error {
public:
    using Error::Error;
};

class EmptySubset : public Error {
public:
    EmptySubset() : Error("trimmed subset is empty") {}
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class InvalidOverlap : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// R·N_P + N_Q vanishes after sign alignment.
class DegenerateNormalSum : public Error {
public:
    using Error::Error;
};

}  // namespace mvreg
