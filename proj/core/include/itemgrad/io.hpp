#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace itemgrad {

// Both throw IoError with the path in the message.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace itemgrad
