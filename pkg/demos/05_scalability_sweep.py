"""A slice of the scalability sweep: chunk sizes vs arrival intervals.

Shows: the event-based offset at low rates, the pile-up past the critical
rate (the 2-second line), and hybrid's variable stages beating event-based
staging everywhere.
"""

from graphstage import SimulationSpec, Strategy, grid_sweep, run_simulation

TAUS = (8000, 4000, 2000, 1000, 500, 250)

one = run_simulation(SimulationSpec(Strategy.EVENT_BASED, 1, 8000))
print("event-based, 1 event / 8 s: the first animation waits for five events")
print(f"  offset = {one.offset} ms; per-event delays {one.per_event_delay}")
print(f"  {one.backlog_at_end} events never shown (below threshold at the end)\n")

for strategy in (Strategy.TIME_BASED, Strategy.EVENT_BASED, Strategy.HYBRID):
    sweep = grid_sweep(SimulationSpec(strategy, 1, 1000),
                       chunk_sizes=(1, 2, 5, 8, 10), tau_grid_ms=TAUS)
    metric = ("events shown per cycle" if strategy is Strategy.TIME_BASED
              else "mean delay to depiction, ms")
    print(f"=== {strategy.value}: {metric} ===")
    print(sweep.to_matrix_csv())

print("reading the tables: time-based cells equal the chunk size until the\n"
      "interval drops under one animation (events per cycle explode); the\n"
      "event/hybrid staircase climbs once n events arrive faster than 5 can\n"
      "be animated; hybrid's 1550 ms additions-only stages keep every cell\n"
      "at or under the event-based delay.")
