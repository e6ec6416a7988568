#include "trr/hash.hpp"

#include <openssl/evp.h>

namespace trr {

Hash256 sha256(ByteView data)
{
    Hash256 out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw Error(ErrorCode::IoError, "EVP_Digest(sha256) failed");
    }
    return out;
}

Hash256 sha256d(ByteView data)
{
    Hash256 first = sha256(data);
    return sha256(first);
}

} // namespace trr
