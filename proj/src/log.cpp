#include "clmrc/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace clmrc {

void configure_logging() {
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("clmrc");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)once;
    const char* env = std::getenv("CLMRC_LOG");
    spdlog::set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace clmrc
