# %% [markdown]
# # Event windows and the class-300 detector
#
# Around a holiday we look at 15 days before its first day and 15 days after its
# last, skipping the holiday itself. Each cell of a change table is the
# day-over-day percent change of one triad class; the first day after the event
# is compared with the last day before it.
#
# The package ships the published change tables of the 2014 and 2015 holidays.

# %%
import io
from importlib import resources

from banknet.analytics import default_event_calendar, rank_detectors, read_change_table

tables = []
for year in (2014, 2015):
    text = resources.files("banknet.data").joinpath(f"motif_change_{year}.csv").read_text()
    tables.append(read_change_table(io.StringIO(text)))

for t, year in zip(tables, (2014, 2015)):
    print(year, "class 300 at D+1:", t.cell("D+1", 16), "at D+2:", t.cell("D+2", 16))

# %% [markdown]
# Patterns are ranked by the mean size of their first-day change; the second-day
# rebound breaks ties.

# %%
for score in rank_detectors(tables)[:5]:
    print(f"P{score.pattern:<3} score {score.score:6.1f}  rebound {score.rebound:6.1f}")

# %% [markdown]
# A drop of 87% followed by +564% means the class came back to about 86% of its
# level before the holiday.

# %%
print(round(100 * (1 - 0.87) * (1 + 5.64)))

for event in default_event_calendar():
    print(event.label, event.start, event.end, "first day after:", event.day(1))
