/**
 * Application shell: auth gate, experiment bootstrap, and the three
 * tabs (Assessment, Histogram, Summarize). The shell re-renders on
 * every state change; ``settled`` lets tests await the current render
 * chain, including the async tab views.
 */

import {
  getExperiment,
  getTaxonomy,
  listTaxonomies,
  startExperiment,
} from './api.js';
import { el } from './dom.js';
import { resetSession, store, type Tab } from './state.js';
import { renderAssessment } from './views/assessment.js';
import { renderAuth } from './views/auth.js';
import { renderHistogram } from './views/histogram.js';
import { renderSummarize } from './views/summarize.js';

const TABS: Array<{ id: Tab; title: string }> = [
  { id: 'assessment', title: 'Assessment' },
  { id: 'histogram', title: 'Histogram' },
  { id: 'summarize', title: 'Summarize' },
];

let rendering: Promise<void> = Promise.resolve();
let bootstrapping = false;

function experimentKey(username: string): string {
  return `isoready.experiment.${username}`;
}

async function bootstrap(): Promise<void> {
  const state = store.get();
  if (!state.token || !state.username) return;
  const listing = await listTaxonomies();
  const first = listing.taxonomies[0];
  if (!first) throw new Error('the server offers no taxonomies');
  const taxonomy = await getTaxonomy(first.id);

  // Resume the experiment from the last visit when it still exists.
  let experiment = null;
  const rememberedId = localStorage.getItem(experimentKey(state.username));
  if (rememberedId) {
    try {
      experiment = await getExperiment(state.token, rememberedId);
    } catch {
      localStorage.removeItem(experimentKey(state.username));
    }
  }
  if (!experiment) {
    experiment = await startExperiment(state.token, taxonomy.id);
  }
  store.set({ taxonomy, experiment, unsavedEntries: {} });
}

function header(): HTMLElement {
  const state = store.get();
  const brand = el('h1', { class: 'brand', text: 'isoready' });
  if (!state.token) {
    return el('header', {}, [brand]);
  }
  const logout = el('button', { class: 'secondary', text: 'Log out' });
  logout.addEventListener('click', () => resetSession());
  const nav = el(
    'nav',
    { class: 'tabs', role: 'tablist' },
    TABS.map(({ id, title }) => {
      const button = el('button', {
        class: id === state.tab ? 'tab active' : 'tab',
        'data-tab': id,
        role: 'tab',
        text: title,
      });
      button.addEventListener('click', () => store.set({ tab: id }));
      return button;
    }),
  );
  return el('header', {}, [
    brand,
    nav,
    el('div', { class: 'session' }, [
      el('span', { class: 'whoami', text: state.username ?? '' }),
      logout,
    ]),
  ]);
}

function banner(): HTMLElement {
  const state = store.get();
  if (!state.error) return el('div', { class: 'banner', hidden: '' });
  const dismiss = el('button', { class: 'secondary', text: 'Dismiss' });
  dismiss.addEventListener('click', () => store.set({ error: null }));
  return el('div', { class: 'banner', role: 'alert' }, [
    el('span', { text: state.error }),
    dismiss,
  ]);
}

export function init(root: HTMLElement): void {
  const sync = (): void => {
    const state = store.get();
    if (state.experiment && state.username) {
      localStorage.setItem(
        experimentKey(state.username),
        state.experiment.id,
      );
    }
    root.innerHTML = '';
    root.append(header(), banner());
    const content = el('main', { class: 'content' });
    root.append(content);

    rendering = (async () => {
      if (!state.token) {
        renderAuth(content);
        return;
      }
      if (!state.taxonomy || !state.experiment) {
        if (!bootstrapping) {
          bootstrapping = true;
          try {
            await bootstrap();
          } finally {
            bootstrapping = false;
          }
        }
        return;
      }
      if (state.tab === 'assessment') renderAssessment(content);
      else if (state.tab === 'histogram') await renderHistogram(content);
      else await renderSummarize(content);
    })().catch((error) => {
      const message = String(error);
      if (store.get().error !== message) {
        store.set({ error: message });
      }
    });
  };

  store.subscribe(sync);
  sync();
}

/** Awaits the render chain until no state change re-triggers it. */
export async function settled(): Promise<void> {
  for (;;) {
    const previous = rendering;
    await previous;
    if (previous === rendering) return;
  }
}

const mount = document.getElementById('app');
if (mount) {
  init(mount);
}
