#include "trr/cli_support.hpp"

#include <charconv>
#include <cstdlib>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <sys/file.h>
#include <thread>
#include <unistd.h>

namespace trr::cli {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Holds an flock on a file descriptor for the lifetime of the object.
class LockedFile {
public:
    LockedFile(const std::filesystem::path& path, int flags, int lock)
        : fd_(::open(path.c_str(), flags | O_CLOEXEC, 0644))
    {
        if (fd_ < 0) throw Error(ErrorCode::IoError, "cannot open " + path.string());
        ::flock(fd_, lock);
    }
    ~LockedFile()
    {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    LockedFile(const LockedFile&) = delete;
    LockedFile& operator=(const LockedFile&) = delete;

    std::string read_all() const
    {
        std::string out;
        char buf[4096];
        ::lseek(fd_, 0, SEEK_SET);
        ssize_t n;
        while ((n = ::read(fd_, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
        return out;
    }

    void write_all(std::string_view data, bool truncate)
    {
        if (truncate) {
            ::lseek(fd_, 0, SEEK_SET);
            if (::ftruncate(fd_, 0) != 0) throw Error(ErrorCode::IoError, "truncate failed");
        }
        while (!data.empty()) {
            ssize_t n = ::write(fd_, data.data(), data.size());
            if (n <= 0) throw Error(ErrorCode::IoError, "write failed");
            data.remove_prefix(static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
};

std::uint64_t parse_height(std::string_view text)
{
    text = trim(text);
    if (text.empty()) return 0;
    std::uint64_t h = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), h);
    if (ec != std::errc{} || p != text.data() + text.size()) {
        throw Error(ErrorCode::InvalidArgument, "block file does not hold a height");
    }
    return h;
}

} // namespace

std::vector<NodeDescriptor> parse_directory(std::string_view text)
{
    std::vector<NodeDescriptor> out;
    std::size_t lineno = 0;
    for (auto line : split(text, '\n')) {
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        auto bad = [&](const std::string& why) {
            throw Error(ErrorCode::InvalidArgument, "directory line " + std::to_string(lineno) + ": " + why);
        };
        auto f = split(line, ',');
        if (f.size() != 4) bad("expected node_id,ip,port,pubkey_hex");
        NodeDescriptor d;
        d.node_id = std::string(f[0]);
        if (d.node_id.empty()) bad("empty node id");
        try {
            d.ip = wire::Ipv4::parse(f[1]);
        } catch (const Error&) {
            bad("bad address");
        }
        unsigned port = 0;
        auto [p, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), port);
        if (ec != std::errc{} || p != f[2].data() + f[2].size() || port == 0 || port > 65535) bad("bad port");
        d.port = static_cast<std::uint16_t>(port);
        std::optional<ec::CurvePoint> key;
        try {
            key = ec::decompress(from_hex(f[3]));
        } catch (const Error&) {
        }
        if (!key) bad("bad public key");
        d.pubkey = *key;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<NodeDescriptor> load_directory(const std::filesystem::path& path)
{
    Bytes raw = read_file(path);
    return parse_directory(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
}

std::string format_directory_line(const NodeDescriptor& d)
{
    auto pub = ec::compress(d.pubkey);
    return d.node_id + "," + d.ip.to_string() + "," + std::to_string(d.port) + "," + to_hex(pub);
}

Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, ByteView data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

ec::KeyPair load_private_key(const std::filesystem::path& path)
{
    Bytes raw = read_file(path);
    if (raw.size() != 32) throw Error(ErrorCode::InvalidKey, path.string() + " is not a 32-byte key");
    return ec::keypair_from_private(ec::Scalar{ec::from_big_endian(raw)});
}

// ---------------------------------------------------------------------------

std::vector<FileBroadcast::Entry> FileBroadcast::entries() const
{
    if (!std::filesystem::exists(path_)) return {};
    LockedFile f(path_, O_RDONLY, LOCK_SH);
    std::vector<Entry> out;
    const std::string text = f.read_all();
    for (auto line : split(text, '\n')) {
        if (line.empty()) continue;
        auto parts = split(line, ' ');
        if (parts.size() < 3) continue;
        Bytes id = from_hex(parts[0]);
        if (id.size() != 32) continue;
        Entry e{};
        std::copy(id.begin(), id.end(), e.txid.begin());
        e.origin = wire::Ipv4::parse(parts[1]);
        std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), e.time);
        out.push_back(e);
    }
    return out;
}

bool FileBroadcast::seen(const TxId& txid) const
{
    for (const auto& e : entries()) {
        if (e.txid == txid) return true;
    }
    return false;
}

bool FileBroadcast::verify(ByteView tx) const
{
    return !tx.empty() && tx.size() <= wire::kMaxTxSize;
}

void FileBroadcast::broadcast(ByteView tx, wire::Ipv4 origin)
{
    TxId id = txid_of(tx);
    LockedFile f(path_, O_RDWR | O_CREAT, LOCK_EX);
    std::string hex = to_hex(id);
    if (f.read_all().find(hex) != std::string::npos) return;
    std::ostringstream line;
    line << hex << ' ' << origin.to_string() << ' ' << std::time(nullptr) << ' ' << to_hex(tx) << '\n';
    f.write_all(line.str(), false);
}

// ---------------------------------------------------------------------------

std::uint64_t WallBlockClock::height()
{
    auto now = std::chrono::system_clock::now().time_since_epoch();
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(now) / interval_);
}

void WallBlockClock::wait_until(std::uint64_t target)
{
    while (height() < target) std::this_thread::sleep_for(std::min<Millis>(interval_ / 10, Millis{100}));
    std::this_thread::sleep_for(settle_);
}

std::uint64_t FileBlockClock::height()
{
    if (!std::filesystem::exists(path_)) return 0;
    LockedFile f(path_, O_RDONLY, LOCK_SH);
    return parse_height(f.read_all());
}

void FileBlockClock::wait_until(std::uint64_t target)
{
    while (height() < target) std::this_thread::sleep_for(Millis{50});
    std::this_thread::sleep_for(settle_);
}

std::uint64_t FileBlockClock::advance(std::uint64_t blocks)
{
    LockedFile f(path_, O_RDWR | O_CREAT, LOCK_EX);
    std::uint64_t h = parse_height(f.read_all()) + blocks;
    f.write_all(std::to_string(h) + "\n", true);
    return h;
}

void FileBlockClock::set(std::uint64_t height)
{
    LockedFile f(path_, O_RDWR | O_CREAT, LOCK_EX);
    f.write_all(std::to_string(height) + "\n", true);
}

int log_level_from_env()
{
    const char* v = std::getenv("TRR_LOG");
    if (!v) return 0;
    std::string s(v);
    if (s.empty() || s == "0" || s == "off") return 0;
    if (s == "2" || s == "debug") return 2;
    return 1;
}

} // namespace trr::cli
