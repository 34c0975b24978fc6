#include "insitu/data_dir.hpp"

#include <cstdlib>

namespace insitu {

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("INSITU_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return INSITU_BUILTIN_DATA_DIR;
}

}  // namespace insitu
