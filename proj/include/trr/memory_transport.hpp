#pragma once

// In-process transports.
//
// make_pipe gives a thread-safe connected pair for driving serve_connection
// from another thread. LocalNetwork is fully synchronous: sending a frame on a
// connection runs the remote node's session to completion before send()
// returns, so a whole onion round trip happens inside one call stack and
// needs no threads. Frames are serialized and re-parsed on every hop.

#include "trr/node.hpp"

#include <map>
#include <memory>
#include <utility>

namespace trr {

std::pair<std::unique_ptr<Connection>, std::unique_ptr<Connection>> make_pipe(Endpoint a, Endpoint b);

class LocalNetwork {
public:
    LocalNetwork();
    ~LocalNetwork();
    LocalNetwork(const LocalNetwork&) = delete;
    LocalNetwork& operator=(const LocalNetwork&) = delete;

    /// Dialer whose connections present `origin` as the caller's address.
    /// Owned by the network and valid for its lifetime.
    Dialer& dialer_for(Endpoint origin);

    void attach(NodeService& service);
    void detach(const Endpoint& endpoint);

    /// Number of trr requests currently in flight on the call stack; the
    /// n-th hop of a route sees depth n while it processes its request.
    std::size_t depth() const noexcept { return depth_; }
    std::uint64_t connections_opened() const noexcept { return opened_; }
    std::uint64_t bytes_carried() const noexcept { return bytes_; }

private:
    class LocalDialer;
    class LocalConnection;
    friend class LocalDialer;
    friend class LocalConnection;

    std::map<Endpoint, NodeService*> services_;
    std::map<Endpoint, std::unique_ptr<LocalDialer>> dialers_;
    std::size_t depth_ = 0;
    std::uint64_t opened_ = 0;
    std::uint64_t bytes_ = 0;
};

} // namespace trr
