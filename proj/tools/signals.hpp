#pragma once

#include <csignal>
#include <pthread.h>

namespace boulescope::tools {

/// Blocks SIGINT/SIGTERM in the calling thread (and threads it spawns later) so
/// that wait_for_shutdown_signal can collect them synchronously.
inline sigset_t block_shutdown_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

inline int wait_for_shutdown_signal(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
    return sig;
}

}  // namespace boulescope::tools
