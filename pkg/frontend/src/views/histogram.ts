/**
 * Histogram tab: achievement and priority bars, toggleable between the
 * six domains and the 21 controls. Open experiments show a live partial
 * preview with a prompt to finalize; bar numbers are the API's display
 * strings and bar widths scale on the report's own scale bounds.
 */

import type { BarDoc, HistogramReport } from '../api.js';
import { ApiError, getHistogramReport } from '../api.js';
import { el } from '../dom.js';
import { store } from '../state.js';

function barPair(bar: BarDoc, report: HistogramReport): HTMLElement {
  const span = report.scale_max - report.scale_min;
  const widthOf = (value: number): string =>
    `${((value - report.scale_min) / span) * 100}%`;
  return el('div', { class: 'bar-group', 'data-bar': bar.name }, [
    el('span', { class: 'bar-name', text: bar.name }),
    el('div', { class: 'bar-track' }, [
      el('div', {
        class: 'bar achievement',
        style: `width: ${widthOf(bar.achievement)}`,
      }),
      el('span', {
        class: 'bar-value achievement-value',
        text: bar.achievement_display,
      }),
    ]),
    el('div', { class: 'bar-track' }, [
      el('div', {
        class: 'bar priority',
        style: `width: ${widthOf(report.scale_min + bar.priority)}`,
      }),
      el('span', {
        class: 'bar-value priority-value',
        text: bar.priority_display,
      }),
    ]),
  ]);
}

function levelToggle(): HTMLElement {
  const buttons = (['domain', 'control'] as const).map((level) => {
    const button = el('button', {
      class: level === store.get().histogramLevel ? 'active' : '',
      'data-level': level,
      text: `${level} level`,
    });
    button.addEventListener('click', () => {
      store.set({ histogramLevel: level });
    });
    return button;
  });
  return el('div', { class: 'level-toggle', role: 'tablist' }, buttons);
}

export async function renderHistogram(root: HTMLElement): Promise<void> {
  root.innerHTML = '';
  const state = store.get();
  if (!state.token || !state.experiment) return;

  root.append(levelToggle());
  const body = el('div', { class: 'histogram-body' });
  root.append(body);

  try {
    const report = await getHistogramReport(
      state.token,
      state.experiment.id,
      state.histogramLevel,
    );
    if (!report.finalized) {
      body.append(
        el('p', {
          class: 'preview-note',
          text:
            'Partial preview of the scores saved so far. Finalize the ' +
            'attempt on the Assessment tab to lock the result.',
        }),
      );
    }
    body.append(
      el('div', { class: 'legend' }, [
        el('span', { class: 'legend-item achievement', text: 'achievement' }),
        el('span', { class: 'legend-item priority', text: 'priority' }),
      ]),
      el(
        'div',
        { class: 'bars', 'data-level': report.level },
        report.bars.map((bar) => barPair(bar, report)),
      ),
    );
  } catch (error) {
    if (error instanceof ApiError && error.code === 'EmptyNode') {
      body.append(
        el('p', {
          class: 'empty-note',
          text:
            'No scores saved yet. Score some issues on the Assessment ' +
            'tab to see a preview.',
        }),
      );
    } else {
      body.append(
        el('p', {
          class: 'error-note',
          text:
            error instanceof ApiError
              ? `${error.code}: ${error.message}`
              : String(error),
        }),
      );
    }
  }
}
