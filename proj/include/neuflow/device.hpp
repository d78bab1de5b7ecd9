#pragma once

#include <string>

namespace neuflow {

// Compute-device selection via the NEUFLOW_DEVICE environment variable.
// Unset or "cpu" selects the CPU substrate; an accelerator index is a valid
// spelling but this build ships no accelerator backend, so it fails loudly
// instead of silently computing on the wrong device.
std::string resolve_device();

}  // namespace neuflow
