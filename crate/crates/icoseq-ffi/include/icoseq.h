/* C interface for the icoseq pulse-sequence library.
 *
 * All objects are opaque handles created and released by the library.
 * Functions return a status code (ICOSEQ_OK on success); after a failure,
 * icoseq_last_error() returns a thread-local message valid until the next
 * failing call on the same thread. Strings returned through output
 * parameters must be released with icoseq_string_free().
 */

#ifndef ICOSEQ_H
#define ICOSEQ_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define ICOSEQ_OK 0
#define ICOSEQ_ERR_INVALID 1
#define ICOSEQ_ERR_INFEASIBLE 2
#define ICOSEQ_ERR_NUMERIC 3
#define ICOSEQ_ERR_PANIC 4

typedef struct IcoseqGroup IcoseqGroup;
typedef struct IcoseqSequence IcoseqSequence;
typedef struct IcoseqTrajectory IcoseqTrajectory;

const char *icoseq_last_error(void);
void icoseq_string_free(char *s);

/* Rotation groups: name is "clifford" or "icosahedral". */
int icoseq_group_new(const char *name, IcoseqGroup **out);
int icoseq_group_order(const IcoseqGroup *group); /* -1 on null */
void icoseq_group_free(IcoseqGroup *group);

/* Sequence synthesis and (de)serialization. */
int icoseq_synthesize_preset(const char *name, double cycle_time_s,
                             IcoseqSequence **out);
int icoseq_sequence_from_json(const char *json, IcoseqSequence **out);
int icoseq_sequence_to_json(const IcoseqSequence *seq, char **out);
int icoseq_sequence_pulse_count(const IcoseqSequence *seq); /* -1 on null */
double icoseq_sequence_cycle_time(const IcoseqSequence *seq); /* NaN on null */
void icoseq_sequence_free(IcoseqSequence *seq);

/* Two-path verification of the engineered average Hamiltonian for an
 * NV-style input: couplings holds n_couplings (a, b, omega_hz) triples. */
int icoseq_verify(const IcoseqSequence *seq, int n_spins, double zeeman_hz,
                  const double *couplings, int n_couplings,
                  double *out_deviation);

/* Exact evolution of all-plus-x spins. couplings_hz is a row-major
 * n_spins x n_spins symmetric matrix with zero diagonal. mode: 0
 * instantaneous, 1 composite, 2 off-resonant. Samples once per cycle. */
int icoseq_simulate(const IcoseqSequence *seq, int n_spins,
                    const double *couplings_hz, double bz_t, int mode,
                    int cycles, IcoseqTrajectory **out);

int icoseq_trajectory_len(const IcoseqTrajectory *traj); /* -1 on null */
/* Borrowed pointers, valid until the trajectory is freed. */
const double *icoseq_trajectory_times(const IcoseqTrajectory *traj);
const double *icoseq_trajectory_fidelity(const IcoseqTrajectory *traj);
void icoseq_trajectory_free(IcoseqTrajectory *traj);

#ifdef __cplusplus
}
#endif

#endif /* ICOSEQ_H */
