#pragma once

namespace wf {

/// Fast invariant suite: filter identities, transform round trips, attention
/// vs. kernel summation, autodiff spot checks, RNG determinism. Prints one
/// line per check; throws on the first failure.
void run_selftest();

}  // namespace wf
