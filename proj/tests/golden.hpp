#pragma once

#include "trr/bytes.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace trr::testing {

/// Loads `<name> <hex>` lines from tests/data/golden_vectors.txt.
inline std::map<std::string, Bytes> load_golden_vectors()
{
    std::ifstream in(std::string(TRR_TEST_DATA_DIR) + "/golden_vectors.txt");
    if (!in) throw Error(ErrorCode::IoError, "golden_vectors.txt not found");
    std::map<std::string, Bytes> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string name, hex;
        fields >> name >> hex;
        out[name] = from_hex(hex);
    }
    return out;
}

} // namespace trr::testing
