#pragma once

#include <filesystem>

namespace insitu {

/// Root of the bundled data (targets/, mnist/). INSITU_DATA_DIR overrides the
/// location baked in at build time.
std::filesystem::path default_data_dir();

}  // namespace insitu
