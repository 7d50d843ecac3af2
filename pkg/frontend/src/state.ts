/**
 * Client session state: one observable store plus the score autosave
 * queue. Unsaved entries drain to empty after each successful save;
 * while a save is in flight new selections keep accumulating and go
 * out with the next request (last write per leaf wins, mirroring the
 * server's merge semantics).
 */

import type { ExperimentView, TaxonomyDoc } from './api.js';
import { putScores } from './api.js';

export type Tab = 'assessment' | 'histogram' | 'summarize';

export interface AppState {
  token: string | null;
  username: string | null;
  taxonomy: TaxonomyDoc | null;
  experiment: ExperimentView | null;
  unsavedEntries: Record<string, number>;
  tab: Tab;
  histogramLevel: 'domain' | 'control';
  error: string | null;
}

export class Store<T> {
  private listeners: Array<() => void> = [];

  constructor(private value: T) {}

  get(): T {
    return this.value;
  }

  set(patch: Partial<T>): void {
    this.value = { ...this.value, ...patch };
    this.listeners.forEach((listener) => listener());
  }

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((entry) => entry !== listener);
    };
  }
}

export const store = new Store<AppState>({
  token: null,
  username: null,
  taxonomy: null,
  experiment: null,
  unsavedEntries: {},
  tab: 'assessment',
  histogramLevel: 'domain',
  error: null,
});

let inflight: Promise<void> | null = null;

async function drain(): Promise<void> {
  for (;;) {
    const state = store.get();
    const batch = state.unsavedEntries;
    if (!state.token || !state.experiment || Object.keys(batch).length === 0) {
      return;
    }
    const experiment = await putScores(state.token, state.experiment.id, batch);
    const leftover = { ...store.get().unsavedEntries };
    for (const [leaf, score] of Object.entries(batch)) {
      if (leftover[leaf] === score) delete leftover[leaf];
    }
    store.set({ experiment, unsavedEntries: leftover, error: null });
  }
}

/** Queue one selection and kick the autosave if it is not running. */
export function queueScore(leafId: string, score: number): Promise<void> {
  store.set({
    unsavedEntries: { ...store.get().unsavedEntries, [leafId]: score },
  });
  if (!inflight) {
    inflight = drain().finally(() => {
      inflight = null;
    });
  }
  return inflight;
}

/** Resolves once every queued score has been saved. */
export async function savesSettled(): Promise<void> {
  while (inflight) {
    await inflight;
  }
}

/** Scores as the user sees them: saved sheet overlaid with unsaved picks. */
export function draftSheet(state: AppState): Record<string, number> {
  return { ...(state.experiment?.sheet ?? {}), ...state.unsavedEntries };
}

export function resetSession(): void {
  store.set({
    token: null,
    username: null,
    experiment: null,
    unsavedEntries: {},
    tab: 'assessment',
    error: null,
  });
}
