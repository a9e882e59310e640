#pragma once

#include <string>
#include <vector>

namespace snm {

// Doubles rounded to 12 significant digits, so oracle-mode outputs are
// reproducible across platforms up to the documented tolerance.
std::string format_value(double v);

// Plain CSV: an optional '# config ...' comment line carrying the run's full
// configuration, a header row, then the data rows. UTF-8, LF line endings.
void write_csv(const std::string& path, const std::string& config_json,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string render_csv(const std::string& config_json,
                       const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace snm
