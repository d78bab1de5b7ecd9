#include "neuflow/device.hpp"

#include <cstdlib>
#include <stdexcept>

namespace neuflow {

std::string resolve_device() {
  const char* env = std::getenv("NEUFLOW_DEVICE");
  if (!env || std::string(env).empty() || std::string(env) == "cpu") return "cpu";
  const std::string v(env);
  bool numeric = !v.empty();
  for (char c : v) numeric = numeric && c >= '0' && c <= '9';
  if (numeric)
    throw std::runtime_error("NEUFLOW_DEVICE=" + v +
                             ": accelerator backends are not available in this build; "
                             "use NEUFLOW_DEVICE=cpu");
  throw std::runtime_error("NEUFLOW_DEVICE=" + v +
                           ": expected 'cpu' or an accelerator index");
}

}  // namespace neuflow
