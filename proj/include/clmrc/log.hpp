#pragma once

#include <spdlog/spdlog.h>

namespace clmrc {

/// Applies CLMRC_LOG (trace|debug|info|warn|error|off, default warn) to the
/// default spdlog logger, which writes to stderr. Safe to call repeatedly.
void configure_logging();

}  // namespace clmrc
