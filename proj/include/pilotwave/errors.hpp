#ifndef PILOTWAVE_ERRORS_HPP
#define PILOTWAVE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pilotwave {

/// The guidance equation has poles at wavefunction nodes; evaluating the
/// velocity or weak value below the node threshold raises this instead of
/// returning garbage.
class NodeRegionError : public std::runtime_error {
public:
    explicit NodeRegionError(const std::string& what) : std::runtime_error(what) {}
};

/// Step shrinking near a node was exhausted; the trajectory is abandoned at
/// last_valid_time.
class NodeStallError : public std::runtime_error {
public:
    NodeStallError(const std::string& what, double last_valid_time)
        : std::runtime_error(what), last_valid_time(last_valid_time) {}
    double last_valid_time;
};

/// The linear-response pointer model is invalid at the sampled point
/// (kappa * |Re p_w| > 1 would require an outcome probability outside [0,1]).
class SaturationError : public std::runtime_error {
public:
    explicit SaturationError(const std::string& what) : std::runtime_error(what) {}
};

/// Richardson comparison between full and half resolution disagrees.
class GridTooCoarseError : public std::runtime_error {
public:
    explicit GridTooCoarseError(const std::string& what) : std::runtime_error(what) {}
};

/// The numerical propagator's grid does not resolve the initial state or
/// does not absorb its spreading.
class ResolutionError : public std::runtime_error {
public:
    explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

/// Distribution distances require identical binning.
class BinMismatchError : public std::runtime_error {
public:
    explicit BinMismatchError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pilotwave

#endif
