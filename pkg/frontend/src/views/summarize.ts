/**
 * Summarize tab: the four headline features (score on the scale,
 * percentage, predicate, advice), report downloads, the attempt
 * history with its trend sparkline, and the entry point for starting
 * the next attempt. All numbers render the API's display strings.
 */

import type { HistoryDoc, SummaryReport } from '../api.js';
import {
  ApiError,
  fetchExport,
  getHistory,
  getSummaryReport,
  startExperiment,
} from '../api.js';
import { el } from '../dom.js';
import { store } from '../state.js';

function headline(report: SummaryReport): HTMLElement {
  const summary = report.summary;
  return el('div', { class: 'headline card' }, [
    el('div', { class: 'feature' }, [
      el('span', {
        class: 'feature-value',
        id: 'summary-scale',
        text: `${summary.out_of_scale_display} / ${report.scale_max}`,
      }),
      el('span', { class: 'feature-label', text: 'achievement' }),
    ]),
    el('div', { class: 'feature' }, [
      el('span', {
        class: 'feature-value',
        id: 'summary-percent',
        text: `${summary.out_of_hundred_display}%`,
      }),
      el('span', { class: 'feature-label', text: 'of the ideal' }),
    ]),
    el('div', { class: 'feature' }, [
      el('span', {
        class: 'feature-value',
        id: 'summary-predicate',
        text: summary.predicate,
      }),
      el('span', { class: 'feature-label', text: 'predicate' }),
    ]),
  ]);
}

function adviceBlock(report: SummaryReport): HTMLElement {
  const advice = report.summary.advice;
  return el('div', { class: 'advice card' }, [
    el('h3', { text: 'Advice' }),
    el('p', { class: 'advice-extremes' }, [
      el('span', {
        class: 'weakest',
        text: `Weakest: ${advice.weakest.join(', ')}`,
      }),
      ' ',
      el('span', {
        class: 'strongest',
        text: `Strongest: ${advice.strongest.join(', ')}`,
      }),
    ]),
    el('p', { id: 'advice-text', text: advice.text }),
  ]);
}

function sparkline(history: HistoryDoc): SVGElement {
  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
  svg.setAttribute('class', 'sparkline');
  svg.setAttribute('viewBox', '0 0 120 32');
  const trend = history.trend;
  const top = Math.max(...trend, 1);
  const step = trend.length > 1 ? 112 / (trend.length - 1) : 0;
  const points = trend
    .map((value, index) => {
      const x = 4 + index * step;
      const y = 28 - (value / top) * 24;
      return `${x},${y}`;
    })
    .join(' ');
  const line = document.createElementNS(
    'http://www.w3.org/2000/svg',
    'polyline',
  );
  line.setAttribute('points', points);
  line.setAttribute('fill', 'none');
  svg.append(line);
  return svg;
}

function historyBlock(history: HistoryDoc): HTMLElement {
  const rows = history.rows.map((row) =>
    el('li', { class: 'history-row' }, [
      el('span', { class: 'history-attempt', text: `#${row.attempt_number}` }),
      el('span', { class: 'history-overall', text: row.overall_display }),
      el('span', { class: 'history-predicate', text: row.predicate }),
    ]),
  );
  const block = el('div', { class: 'history card' }, [
    el('h3', { text: 'Attempt history' }),
  ]);
  if (rows.length === 0) {
    block.append(el('p', { text: 'No finalized attempts yet.' }));
    return block;
  }
  block.append(sparkline(history), el('ul', { class: 'history-rows' }, rows));
  return block;
}

export async function renderSummarize(root: HTMLElement): Promise<void> {
  root.innerHTML = '';
  const state = store.get();
  if (!state.token || !state.experiment) return;
  const token = state.token;
  const experiment = state.experiment;

  const newAttempt = el('button', {
    id: 'new-attempt',
    text: 'Start a new attempt',
  });
  newAttempt.addEventListener('click', async () => {
    try {
      const next = await startExperiment(token, experiment.taxonomy_id);
      store.set({
        experiment: next,
        unsavedEntries: {},
        tab: 'assessment',
        error: null,
      });
    } catch (error) {
      store.set({
        error:
          error instanceof ApiError
            ? `${error.code}: ${error.message}`
            : String(error),
      });
    }
  });

  const downloads = (['json', 'csv'] as const).map((format) => {
    const button = el('button', {
      class: 'secondary',
      'data-format': format,
      text: `Download ${format.toUpperCase()}`,
    });
    button.addEventListener('click', async () => {
      try {
        const { filename, text } = await fetchExport(
          token,
          experiment.id,
          format,
        );
        const blob = new Blob([text], {
          type: format === 'csv' ? 'text/csv' : 'application/json',
        });
        const url = URL.createObjectURL(blob);
        const anchor = el('a', { href: url, download: filename });
        document.body.append(anchor);
        anchor.click();
        anchor.remove();
        URL.revokeObjectURL(url);
      } catch (error) {
        store.set({
          error:
            error instanceof ApiError
              ? `${error.code}: ${error.message}`
              : String(error),
        });
      }
    });
    return button;
  });

  const body = el('div', { class: 'summarize-body' });
  root.append(
    el('div', { class: 'toolbar' }, [...downloads, newAttempt]),
    body,
  );

  try {
    const [report, history] = await Promise.all([
      getSummaryReport(token, experiment.id),
      getHistory(token, experiment.taxonomy_id),
    ]);
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
    body.append(headline(report), adviceBlock(report), historyBlock(history));
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
