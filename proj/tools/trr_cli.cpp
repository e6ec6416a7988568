#include "trr/analytics.hpp"
#include "trr/cli_support.hpp"
#include "trr/simulator.hpp"
#include "trr/tcp.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

using namespace trr;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

// Seeded generator when --seed is given, OS entropy otherwise.
struct SeedOption {
    std::optional<std::uint64_t> seed;

    template <class F>
    auto with_rng(F&& f)
    {
        if (seed) {
            SplitMix64 g(*seed);
            return f(g);
        }
        OsEntropy g;
        return f(g);
    }
};

// ---------------------------------------------------------------------------

struct KeygenArgs {
    std::string out;
    bool return_key = false;
    SeedOption seed;
};

int cmd_keygen(const KeygenArgs& a)
{
    SeedOption s = a.seed;
    ec::KeyPair kp = s.with_rng([&](auto& g) { return a.return_key ? ec::keygen_even(g) : ec::keygen(g); });
    auto priv = ec::to_big_endian(kp.private_key.value);
    auto pub = ec::compress(kp.public_key);
    cli::write_file(a.out + ".key", priv);
    cli::write_file(a.out + ".pub", pub);
    std::cout << "private " << to_hex(priv) << "\npublic  " << to_hex(pub) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::size_t nodes = 6000;
    std::vector<double> dishonest{0.0};
    std::vector<double> fake{0.0};
    std::vector<unsigned> routes{3};
    std::vector<unsigned> hops{3};
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    std::string csv;
};

int cmd_simulate(const SimulateArgs& a)
{
    if (a.trials == 0) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
    auto rows = analytics::sweep({a.dishonest, a.fake, a.hops, a.routes});
    std::printf("%5s %5s %3s %3s  %9s %9s %9s %8s  %9s %9s %9s %8s\n", "d", "f", "h", "r", "srtr_cf",
                "srtr_mc", "delta", "z", "srd_cf", "srd_mc", "delta", "z");
    for (auto& row : rows) {
        sim::SimConfig cfg;
        cfg.n_nodes = a.nodes;
        cfg.dishonest_rate = row.params.d;
        cfg.fake_rate = row.params.f;
        cfg.num_routes = row.params.r;
        cfg.hops = row.params.h;
        cfg.trials = a.trials;
        cfg.seed = a.seed;
        row.srtr_mc = sim::estimate_srtr(cfg);
        row.srd_mc = sim::estimate_srd(cfg);
        std::printf("%5.3g %5.3g %3u %3u  %9.6f %9.6f %+9.6f %8.2f  %9.6f %9.6f %+9.6f %8.2f\n",
                    row.params.d, row.params.f, row.params.h, row.params.r, row.srtr_cf, row.srtr_mc->rate,
                    row.srtr_mc->rate - row.srtr_cf, row.srtr_mc->z_score(row.srtr_cf), row.srd_cf,
                    row.srd_mc->rate, row.srd_mc->rate - row.srd_cf, row.srd_mc->z_score(row.srd_cf));
    }
    std::string csv = analytics::to_csv(rows, true);
    if (a.csv == "-") {
        std::cout << csv;
    } else if (!a.csv.empty()) {
        cli::write_file(a.csv, as_bytes(csv));
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    std::vector<std::size_t> sizes{8, 32, 64, 128, 256, 1024, 4096, 10240};
    unsigned layers = 5;
    std::uint64_t seed = 1;
    std::string csv;
};

int cmd_bench(const BenchArgs& a)
{
    if (a.layers < 1 || a.layers > kMaxHops) throw Error(ErrorCode::InvalidArgument, "layers must be in 1..10");
    SplitMix64 g(a.seed);
    std::vector<ec::KeyPair> keys;
    Route route;
    for (unsigned i = 0; i < a.layers; ++i) {
        keys.push_back(ec::keygen(g));
        route.hops.push_back({"b" + std::to_string(i), wire::Ipv4{0x0a000001u + i}, 8333, keys.back().public_key});
    }
    ec::KeyPair ret = ec::keygen_even(g);

    std::string csv = "size,layers,cipher_bytes,growth,encrypt_ms,decrypt_ms,roundtrip\n";
    std::printf("%8s %7s %12s %9s %12s %12s %6s\n", "size", "layers", "cipher", "growth", "encrypt_ms",
                "decrypt_ms", "ok");
    bool all_ok = true;
    for (std::size_t size : a.sizes) {
        Bytes tx(size);
        for (auto& b : tx) b = static_cast<std::uint8_t>(g());

        auto t0 = std::chrono::steady_clock::now();
        OnionPacket onion = build_onion(tx, route, 1, ret, 0, g);
        auto t1 = std::chrono::steady_clock::now();
        Bytes packet = onion.ciphertext;
        bool ok = false;
        for (unsigned i = 0; i < a.layers; ++i) {
            PeelResult r = peel_layer(packet, keys[i].private_key);
            if (auto* f = std::get_if<Forward>(&r)) {
                packet = std::move(f->remaining);
            } else {
                ok = i + 1 == a.layers && std::get<Release>(r).data.tx == tx;
            }
        }
        auto t2 = std::chrono::steady_clock::now();
        all_ok = all_ok && ok;

        double enc = std::chrono::duration<double, std::milli>(t1 - t0).count();
        double dec = std::chrono::duration<double, std::milli>(t2 - t1).count();
        double growth = static_cast<double>(onion.ciphertext.size()) / static_cast<double>(size);
        std::printf("%8zu %7u %12zu %9.4f %12.2f %12.2f %6s\n", size, a.layers, onion.ciphertext.size(), growth,
                    enc, dec, ok ? "yes" : "NO");
        char line[160];
        std::snprintf(line, sizeof line, "%zu,%u,%zu,%.6g,%.3f,%.3f,%d\n", size, a.layers,
                      onion.ciphertext.size(), growth, enc, dec, ok ? 1 : 0);
        csv += line;
    }
    if (a.csv == "-") {
        std::cout << csv;
    } else if (!a.csv.empty()) {
        cli::write_file(a.csv, as_bytes(csv));
    }
    return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct ClockArgs {
    std::string block_file;
    double block_interval = 600.0;

    std::unique_ptr<BlockClock> make() const
    {
        if (!block_file.empty()) return std::make_unique<cli::FileBlockClock>(block_file);
        return std::make_unique<cli::WallBlockClock>(
            std::chrono::milliseconds(static_cast<long long>(block_interval * 1000)));
    }
};

struct NodeArgs {
    std::string key;
    std::string directory;
    std::string id;
    std::string listen;
    std::string chain = "chain.log";
    std::string misbehave = "none";
    unsigned timeout_ms = 30000;
    ClockArgs clock;
    std::uint64_t seed = 0;
};

Misbehavior parse_misbehavior(const std::string& s)
{
    if (s == "none") return Misbehavior::None;
    if (s == "deny_connection") return Misbehavior::DenyConnection;
    if (s == "drop_data") return Misbehavior::DropData;
    if (s == "no_release") return Misbehavior::NoRelease;
    if (s == "wrong_pubkey") return Misbehavior::WrongPubkey;
    throw Error(ErrorCode::InvalidArgument, "unknown misbehaviour '" + s + "'");
}

int cmd_node(const NodeArgs& a)
{
    ec::KeyPair keys = cli::load_private_key(a.key);
    auto dir = cli::load_directory(a.directory);
    auto self = std::find_if(dir.begin(), dir.end(), [&](const NodeDescriptor& d) { return d.node_id == a.id; });
    if (self == dir.end()) throw Error(ErrorCode::InvalidArgument, "node id '" + a.id + "' not in directory");

    std::string bind = "0.0.0.0";
    std::uint16_t port = self->port;
    if (!a.listen.empty()) {
        auto colon = a.listen.rfind(':');
        bind = a.listen.substr(0, colon);
        if (colon != std::string::npos) port = static_cast<std::uint16_t>(std::stoi(a.listen.substr(colon + 1)));
    }

    auto clock = a.clock.make();
    cli::FileBroadcast chain(a.chain);
    NodeOptions opts;
    opts.misbehavior = parse_misbehavior(a.misbehave);
    opts.hop_timeout = Millis{a.timeout_ms};
    opts.initial_height = clock->height();

    std::uint64_t seed = a.seed ? a.seed : OsEntropy{}();
    TrrNode node(keys, *self, chain, seed, opts);
    JsonLinesSink sink(std::cerr);
    if (cli::log_level_from_env() > 0) node.set_event_sink(&sink);

    TcpDialer dialer;
    NodeService service(node, dialer);
    TcpServer server(service, bind, port, opts.hop_timeout);
    server.start();
    std::cerr << "node " << a.id << " listening on " << bind << ":" << server.port() << " at height "
              << opts.initial_height << "\n";

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::uint64_t height = opts.initial_height;
    while (!g_stop) {
        std::this_thread::sleep_for(Millis{50});
        std::uint64_t now = clock->height();
        while (height < now) service.on_new_block(++height);
    }
    server.stop();
    return 0;
}

// ---------------------------------------------------------------------------

struct SendArgs {
    std::string tx;
    bool hex = false;
    std::string directory;
    std::string chain = "chain.log";
    std::string self_id;
    unsigned routes = 3;
    unsigned hops = 3;
    std::vector<std::uint64_t> delay{1, 3, 5};
    int rounds = 3;
    unsigned timeout_ms = 30000;
    ClockArgs clock;
    SeedOption seed;
};

int cmd_send(const SendArgs& a)
{
    Bytes tx = cli::read_file(a.tx);
    if (a.hex) {
        std::string text(tx.begin(), tx.end());
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
        tx = from_hex(text);
    }
    if (tx.size() > wire::kMaxTxSize) {
        throw Error(ErrorCode::TxTooLarge, "transaction of " + std::to_string(tx.size()) + " bytes exceeds 10240");
    }
    auto dir = cli::load_directory(a.directory);

    SendPolicy policy;
    policy.num_routes = a.routes;
    policy.hops = a.hops;
    policy.delays = a.delay;
    policy.max_rounds = a.rounds;
    policy.timeout = Millis{a.timeout_ms};

    auto clock = a.clock.make();
    cli::FileBroadcast chain(a.chain);
    TcpDialer dialer;
    SeedOption s = a.seed;
    SendReport report = s.with_rng([&](auto& g) {
        return client_send(tx, dir, policy, dialer, *clock, chain, g,
                           static_cast<std::uint32_t>(std::time(nullptr)), a.self_id);
    });
    std::cout << to_json(report).dump() << "\n";
    if (report.released()) return 0;

    for (const auto& at : report.attempts) {
        std::cerr << "round " << at.round << " via " << at.hops.front().node_id << ": ";
        if (at.ack && at.ack->error_number != 0) {
            std::cerr << "errno " << at.ack->error_number << " (" << at.ack->message << ") err_ip "
                      << at.ack->err_ip.to_string() << " reported by " << at.ack->rpt_ip.to_string() << "\n";
        } else if (at.ack) {
            std::cerr << "acknowledged but not released\n";
        } else {
            std::cerr << at.error << "\n";
        }
    }
    std::cerr << "gave up after " << report.rounds << " rounds\n";
    return 2;
}

// ---------------------------------------------------------------------------

struct BlockArgs {
    std::string block_file;
    std::uint64_t advance = 1;
    std::optional<std::uint64_t> set;
};

int cmd_block(const BlockArgs& a)
{
    cli::FileBlockClock clock(a.block_file, Millis{0});
    std::uint64_t h;
    if (a.set) {
        clock.set(*a.set);
        h = *a.set;
    } else {
        h = clock.advance(a.advance);
    }
    std::cout << h << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Transaction remote release: layered-encryption relay for Bitcoin transactions"};
    app.require_subcommand(1);

    KeygenArgs keygen;
    auto* kg = app.add_subcommand("keygen", "Generate a key pair (<out>.key, <out>.pub)");
    kg->add_option("--out", keygen.out, "Output path prefix")->required();
    kg->add_flag("--return", keygen.return_key, "Even-parity public key, usable as a return key");
    kg->add_option("--seed", keygen.seed.seed, "Deterministic seed");

    SimulateArgs sim;
    auto* sm = app.add_subcommand("simulate", "Closed forms and Monte Carlo estimates of SRTR and SRD");
    sm->add_option("--nodes", sim.nodes, "Network size")->capture_default_str();
    sm->add_option("--dishonest", sim.dishonest, "Dishonest rate(s), comma separated")->delimiter(',');
    sm->add_option("--fake", sim.fake, "Fake TRR rate(s), comma separated")->delimiter(',');
    sm->add_option("--routes", sim.routes, "Routes per send, comma separated")->delimiter(',');
    sm->add_option("--hops", sim.hops, "Hops per route, comma separated")->delimiter(',');
    sm->add_option("--trials", sim.trials, "Monte Carlo trials per grid point")->capture_default_str();
    sm->add_option("--seed", sim.seed)->capture_default_str();
    sm->add_option("--csv", sim.csv, "Write CSV here ('-' for stdout)");

    BenchArgs bench;
    auto* bn = app.add_subcommand("bench", "Time layered encryption and decryption");
    bn->add_option("--sizes", bench.sizes, "Plaintext sizes")->delimiter(',');
    bn->add_option("--layers", bench.layers)->capture_default_str();
    bn->add_option("--seed", bench.seed)->capture_default_str();
    bn->add_option("--csv", bench.csv, "Write CSV here ('-' for stdout)");

    auto add_clock = [](CLI::App* cmd, ClockArgs& c) {
        auto* f = cmd->add_option("--block-file", c.block_file, "Block height file driven by 'trr block'");
        cmd->add_option("--block-interval", c.block_interval, "Seconds per block on the wall clock")
            ->capture_default_str()
            ->excludes(f);
    };

    NodeArgs node;
    auto* nd = app.add_subcommand("node", "Run a TRR node over TCP until interrupted");
    nd->add_option("--key", node.key, "Private key file")->required()->check(CLI::ExistingFile);
    nd->add_option("--directory", node.directory, "Directory file")->required()->check(CLI::ExistingFile);
    nd->add_option("--id", node.id, "This node's id in the directory")->required();
    nd->add_option("--listen", node.listen, "ip:port to bind (default: directory entry)");
    nd->add_option("--chain", node.chain, "Broadcast log file")->capture_default_str();
    nd->add_option("--misbehave", node.misbehave,
                   "none | deny_connection | drop_data | no_release | wrong_pubkey")
        ->capture_default_str();
    nd->add_option("--timeout-ms", node.timeout_ms, "Next-hop timeout")->capture_default_str();
    nd->add_option("--seed", node.seed);
    add_clock(nd, node.clock);

    SendArgs send;
    auto* sd = app.add_subcommand("send", "Send a transaction through TRR");
    sd->add_option("--tx", send.tx, "Transaction file (raw bytes)")->required()->check(CLI::ExistingFile);
    sd->add_flag("--hex", send.hex, "Transaction file holds hex text");
    sd->add_option("--directory", send.directory, "Directory file")->required()->check(CLI::ExistingFile);
    sd->add_option("--chain", send.chain, "Broadcast log file")->capture_default_str();
    sd->add_option("--self", send.self_id, "Own node id, excluded from routes");
    sd->add_option("--routes", send.routes)->capture_default_str();
    sd->add_option("--hops", send.hops)->capture_default_str();
    sd->add_option("--delay", send.delay, "Release delay per route in blocks")->delimiter(',');
    sd->add_option("--rounds", send.rounds, "Retry cap")->capture_default_str();
    sd->add_option("--timeout-ms", send.timeout_ms)->capture_default_str();
    sd->add_option("--seed", send.seed.seed);
    add_clock(sd, send.clock);

    BlockArgs block;
    auto* bk = app.add_subcommand("block", "Advance the height in a block file");
    bk->add_option("--block-file", block.block_file)->required();
    auto* adv = bk->add_option("--advance", block.advance)->capture_default_str();
    bk->add_option("--set", block.set)->excludes(adv);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*kg) return cmd_keygen(keygen);
        if (*sm) return cmd_simulate(sim);
        if (*bn) return cmd_bench(bench);
        if (*nd) return cmd_node(node);
        if (*sd) return cmd_send(send);
        if (*bk) return cmd_block(block);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
