#pragma once

// File-backed plumbing for the command line tool: directory files, key files,
// the append-only broadcast log standing in for the Bitcoin network, and
// block clocks shared between processes.

#include "trr/node.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace trr::cli {

/// One record per line, `node_id,ip,port,pubkey_hex`. Blank lines and lines
/// starting with '#' are skipped. Throws InvalidArgument naming the line.
std::vector<NodeDescriptor> parse_directory(std::string_view text);
std::vector<NodeDescriptor> load_directory(const std::filesystem::path& path);
std::string format_directory_line(const NodeDescriptor& d);

/// Throws IoError.
Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView data);

/// Private key file: 32 raw big-endian bytes. Throws IoError, InvalidKey.
ec::KeyPair load_private_key(const std::filesystem::path& path);

/// Broadcast stub backed by an append-only log with one line per announced
/// transaction: `txid_hex origin_ip unix_time tx_hex`. Appends take an
/// exclusive flock so several node processes can share one log.
class FileBroadcast : public BroadcastView {
public:
    explicit FileBroadcast(std::filesystem::path path) : path_(std::move(path)) {}

    bool seen(const TxId& txid) const override;
    bool verify(ByteView tx) const override;
    void broadcast(ByteView tx, wire::Ipv4 origin) override;

    struct Entry {
        TxId txid;
        wire::Ipv4 origin;
        std::uint64_t time;
    };
    std::vector<Entry> entries() const;

private:
    std::filesystem::path path_;
};

/// Height derived from wall-clock time: floor(unix_time / interval), so
/// every process with the same interval agrees on it.
class WallBlockClock : public BlockClock {
public:
    explicit WallBlockClock(std::chrono::milliseconds interval, Millis settle = Millis{300})
        : interval_(interval), settle_(settle)
    {
    }
    std::uint64_t height() override;
    /// Returns once height ≥ target, plus a short settle time so that nodes
    /// polling the same clock have acted on the block.
    void wait_until(std::uint64_t target) override;

private:
    std::chrono::milliseconds interval_;
    Millis settle_;
};

/// Height stored as a decimal number in a file and advanced by `trr block`.
class FileBlockClock : public BlockClock {
public:
    explicit FileBlockClock(std::filesystem::path path, Millis settle = Millis{300})
        : path_(std::move(path)), settle_(settle)
    {
    }
    std::uint64_t height() override;
    void wait_until(std::uint64_t target) override;
    /// Adds `blocks` under an exclusive lock; returns the new height.
    std::uint64_t advance(std::uint64_t blocks);
    void set(std::uint64_t height);

private:
    std::filesystem::path path_;
    Millis settle_;
};

/// Verbosity from TRR_LOG: unset or "0"/"off" → 0, "1"/"info" → 1, "2"/"debug" → 2.
int log_level_from_env();

} // namespace trr::cli
