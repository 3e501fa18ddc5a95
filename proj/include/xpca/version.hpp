#pragma once

#ifndef XPCA_VERSION
#define XPCA_VERSION "0.0.0"
#endif

namespace xpca {

inline constexpr const char* kVersion = XPCA_VERSION;

}  // namespace xpca
